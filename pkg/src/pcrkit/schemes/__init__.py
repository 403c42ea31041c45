"""Client and server sides of every retrieval scheme."""

from .embed import embed_transform
from .messages import Answer, ClientState, CommonRandomness, DecodeResult, Query
from .params import (
    DIFF,
    IPCR,
    MASKED,
    PCR,
    PLUS,
    SINGLE_PHASE,
    TWO_PHASE,
    WEIGHTED,
    ParamError,
    SchemeParams,
    comm_cost,
    four_server_two_phase_cost,
    phase_servers,
    phases,
    servers_required,
)
from .protocol import answer_gen, decode, known_term, query_gen, run_diff_algorithm

__all__ = [
    "Answer",
    "ClientState",
    "CommonRandomness",
    "DecodeResult",
    "DIFF",
    "IPCR",
    "MASKED",
    "PCR",
    "PLUS",
    "ParamError",
    "Query",
    "SINGLE_PHASE",
    "SchemeParams",
    "TWO_PHASE",
    "WEIGHTED",
    "answer_gen",
    "comm_cost",
    "decode",
    "embed_transform",
    "four_server_two_phase_cost",
    "known_term",
    "phase_servers",
    "phases",
    "query_gen",
    "run_diff_algorithm",
    "servers_required",
]
