"""Session orchestration over simulated replicated servers.

Servers never see each other's queries: each :class:`ServerNode` answers
from its own replica, the query addressed to it, and the shared randomness it
derives from a seed common to all nodes. The user's pads come from a separate
seed domain, so the two randomness sources are independent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import Database
from .schemes import (
    TWO_PHASE,
    Answer,
    ClientState,
    CommonRandomness,
    ParamError,
    Query,
    SchemeParams,
    answer_gen,
    decode,
    query_gen,
)

_USER_DOMAIN = 0
_SHARED_DOMAIN = 1
_SESSION_DOMAIN = 2


def _generator(entropy, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy, spawn_key=key)))


def session_id_for(seed: int) -> str:
    words = np.random.SeedSequence(seed, spawn_key=(_SESSION_DOMAIN,)).generate_state(2, np.uint32)
    return "".join(f"{int(w):08x}" for w in words)


@dataclass
class ServerNode:
    n: int
    alpha: int
    replica: Database
    shared_seed: int
    _rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._rows = np.asarray(self.replica.rows(), dtype=np.int64).reshape(len(self.replica), -1)

    def common_randomness(self, params: SchemeParams, session_id: str, phase: int) -> CommonRandomness:
        rng = _generator([self.shared_seed, int(session_id, 16)], _SHARED_DOMAIN, phase)
        return CommonRandomness.draw(params, rng, phase)

    def answer(self, query: Query, params: SchemeParams, session_id: str) -> Answer:
        if query.server != self.n:
            raise ParamError(f"query for server {query.server} delivered to server {self.n}")
        cr = self.common_randomness(params, session_id, query.phase)
        return answer_gen(self._rows, query, cr, params)


def provision(db: Database, params: SchemeParams, seed: int) -> list[ServerNode]:
    """``params.N`` nodes holding identical replicas and a common shared seed."""
    if params.N < 2:
        raise ParamError("at least two servers are required")
    if db.M != params.M or db.d != params.d:
        raise ParamError(f"database is {db.M}x{db.d}, params expect {params.M}x{params.d}")
    if any(v > params.R for r in db.rows() for v in r):
        raise ParamError(f"database entries exceed R={params.R}")
    shared = int(np.random.SeedSequence(seed, spawn_key=(_SHARED_DOMAIN,)).generate_state(1, np.uint64)[0])
    return [ServerNode(n, params.alphas[n - 1], db, shared) for n in range(1, params.N + 1)]


@dataclass
class PhaseRecord:
    phase: int
    queries: list[Query]
    answers: list[Answer]

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "per_server": [
                {"n": qr.server, "query_components": [list(c) for c in qr.components], "answer": list(a.values)}
                for qr, a in zip(self.queries, self.answers)
            ],
        }


@dataclass
class SessionTranscript:
    session_id: str
    params: SchemeParams
    phases: list[PhaseRecord]
    theta: int | None
    no_counterfactual: bool
    values: tuple[int, ...]

    @property
    def scheme(self) -> str:
        return self.params.scheme

    @property
    def uploaded(self) -> int:
        return sum(qr.size for p in self.phases for qr in p.queries)

    @property
    def downloaded(self) -> int:
        return sum(a.size for p in self.phases for a in p.answers)

    def to_dict(self) -> dict:
        params = self.params.as_dict()
        params.pop("scheme")
        return {
            "session_id": self.session_id,
            "scheme": self.scheme,
            "params": params,
            "phases": [p.to_dict() for p in self.phases],
            "outcome": {
                "theta": self.theta,
                "no_counterfactual": self.no_counterfactual,
                "values": list(self.values),
            },
            "cost": {"upload": self.uploaded, "download": self.downloaded},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, raw: dict) -> SessionTranscript:
        params = SchemeParams.from_dict({"scheme": raw["scheme"], **raw["params"]})
        phases = []
        for ph in raw["phases"]:
            queries = [Query(e["n"], ph["phase"], tuple(tuple(c) for c in e["query_components"])) for e in ph["per_server"]]
            answers = [Answer(e["n"], ph["phase"], tuple(e["answer"])) for e in ph["per_server"]]
            phases.append(PhaseRecord(ph["phase"], queries, answers))
        out = raw["outcome"]
        return cls(raw["session_id"], params, phases, out.get("theta"), bool(out.get("no_counterfactual")), tuple(out.get("values", ())))

    @classmethod
    def from_json(cls, text: str) -> SessionTranscript:
        return cls.from_dict(json.loads(text))


def _run_phase(nodes, state, params, sid, phase) -> tuple[PhaseRecord, object]:
    queries = query_gen(state, params, phase)
    by_id = {node.n: node for node in nodes}
    answers = [by_id[qr.server].answer(qr, params, sid) for qr in queries]
    return PhaseRecord(phase, queries, answers), decode(answers, state, params, phase)


def execute_session(
    nodes: Sequence[ServerNode],
    x: Sequence[int],
    params: SchemeParams,
    seed: int,
    imm: Sequence[int] | None = None,
    w: Sequence[int] | None = None,
) -> SessionTranscript:
    """Run one retrieval end to end and record every message.

    For two-phase schemes the second phase runs only when the first leaves
    more than one candidate.
    """
    if len(nodes) != params.N:
        raise ParamError(f"scheme {params.scheme} needs {params.N} servers, {len(nodes)} provisioned")
    sid = session_id_for(seed)
    state = ClientState.create(params, x, imm=imm, w=w, rng=_generator(seed, _USER_DOMAIN))
    record, result = _run_phase(nodes, state, params, sid, 1)
    records = [record]
    if params.scheme in TWO_PHASE and result.theta_set is not None and len(result.theta_set) > 1:
        state = state.with_theta_set(result.theta_set)
        record, result = _run_phase(nodes, state, params, sid, 2)
        records.append(record)
    return SessionTranscript(sid, params, records, result.theta, result.no_counterfactual, result.values)


def audit_isolation(transcript: SessionTranscript, nodes: Sequence[ServerNode]) -> bool:
    """Recompute each answer from that server's replica, query and shared randomness alone."""
    by_id = {node.n: node for node in nodes}
    params = transcript.params
    for ph in transcript.phases:
        for qr, ans in zip(ph.queries, ph.answers):
            node = by_id.get(qr.server)
            if node is None or ans.server != qr.server or qr.phase != ph.phase:
                return False
            try:
                expected = node.answer(qr, params, transcript.session_id)
            except ParamError:
                return False
            if expected.values != ans.values:
                return False
    return True
