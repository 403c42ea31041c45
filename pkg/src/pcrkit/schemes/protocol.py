"""Query generation, server answers and client decoding for every scheme.

All arithmetic is on int64 arrays of canonical representatives; with
``q < 2**31`` a product of two representatives never overflows, and every
product is reduced before the next one.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..field import VandermondeMatrix
from ..model import Database
from .messages import Answer, ClientState, CommonRandomness, DecodeResult, Query
from .params import DIFF, MASKED, TWO_PHASE, ParamError, SchemeParams, phase_servers


def _vec(v: Sequence[int]) -> np.ndarray:
    return np.asarray(v, dtype=np.int64)


def _pad_query(base: Sequence[int], pad: Sequence[int], alpha: int, q: int) -> tuple[int, ...]:
    return tuple(int(v) for v in (_vec(base) + alpha * _vec(pad)) % q)


def query_gen(state: ClientState, params: SchemeParams, phase: int = 1) -> list[Query]:
    """One query per contacted server; each component is ``value + alpha_n * pad``."""
    s, q, d = params.scheme, params.q, params.d
    p = state.pads
    x = state.x
    if s in TWO_PHASE:
        if phase == 1:
            h1 = state.h1(d)
            xh = tuple(a * b for a, b in zip(x, h1))
            parts = [(h1, p["z1"]), (xh, p["z2"])]
        elif phase == 2:
            parts = [(state.h2(params.M), p["z3"]), (x, p["z4"])]
            if s == "ipcr2_plus":
                parts.append((state.phase2_weights(), p["z5"]))
        else:
            raise ParamError(f"scheme {s} has no phase {phase}")
    elif phase != 1:
        raise ParamError(f"scheme {s} is single-phase")
    elif s in ("ipcr1", "ipcr1_plus"):
        parts = [(x, p["z1"]), (state.h(params), p["z2"])]
    elif "z1" in p:
        parts = [(x, p["z1"]), (state.w, p["z2"])]
    else:
        parts = [(x, p["z"])]

    n_servers = phase_servers(s, phase, params.k)
    return [
        Query(n, phase, tuple(_pad_query(v, z, params.alphas[n - 1], q) for v, z in parts))
        for n in range(1, n_servers + 1)
    ]


def _records(db: Database | np.ndarray) -> np.ndarray:
    if isinstance(db, np.ndarray):
        return db.astype(np.int64, copy=False)
    return np.asarray(db.rows(), dtype=np.int64).reshape(len(db), -1)


def _sq_sum(D: np.ndarray, q: int, weights: np.ndarray | None = None) -> np.ndarray:
    sq = D * D % q
    if weights is not None:
        sq = sq * weights % q
    return sq.sum(axis=1) % q


def answer_gen(
    db: Database | np.ndarray,
    query: Query,
    cr: CommonRandomness,
    params: SchemeParams,
) -> Answer:
    """Server ``query.server``'s answer; a pure function of its inputs."""
    s, q = params.scheme, params.q
    Y = _records(db) % q
    M, d = Y.shape
    if M != params.M or d != params.d:
        raise ParamError(f"database is {M}x{d}, params expect {params.M}x{params.d}")
    a = params.alphas[query.server - 1]
    a2 = a * a % q
    comps = [_vec(c) for c in query.components]
    lengths = [len(c) for c in comps]

    def expect(*lens):
        if tuple(lengths) != lens:
            raise ParamError(f"scheme {s} phase {query.phase} expects components of lengths {lens}, got {lengths}")

    if s in ("baseline", "diff", "mask"):
        expect(d)
        dist = _sq_sum((Y - comps[0]) % q, q)
        if s == "diff":
            vals = (dist[:-1] - dist[1:] + a * cr["z1"]) % q
        else:
            vals = (dist + a * cr["z1"]) % q
    elif s in ("baseline_plus", "diff_plus", "mask_plus"):
        expect(d, d)
        dist = _sq_sum((Y - comps[0]) % q, q, comps[1])
        if s == "diff_plus":
            dist = (dist[:-1] - dist[1:]) % q
        vals = (dist + a * cr["z1"] + a2 * cr["z2"] % q) % q
    elif s in ("ipcr1", "ipcr1_plus"):
        expect(d, d)
        dist = _sq_sum((Y - comps[0]) % q, q, comps[1])
        vals = (dist + a * cr["z1"] + a2 * cr["z2"] % q) % q
    elif s in TWO_PHASE and query.phase == 1:
        expect(d, d)
        T = (comps[0] * Y - comps[1]) % q
        vals = (cr["rho"] * _sq_sum(T, q) % q + a * cr["z1"] + a2 * cr["z2"] % q) % q
    elif s in TWO_PHASE:
        if s == "ipcr2_plus":
            expect(M, d, d)
        else:
            expect(M, d)
        S = comps[0][:, None] * Y % q
        T = (S - comps[1]) % q
        dist = _sq_sum(T, q, comps[2] if s == "ipcr2_plus" else None)
        vals = (dist + a * cr["z3"] + a2 * cr["z4"] % q) % q
        if s == "ipcr2_plus":
            vals = (vals + a2 * a % q * cr["z5"]) % q
    elif s == "lk_baseline":
        expect(d)
        D = (Y - comps[0]) % q
        P = np.ones_like(D)
        for _ in range(params.k):
            P = P * D % q
        vals = P.sum(axis=1) % q
        for ell in range(1, params.k):
            vals = (vals + pow(a, ell, q) * cr["zl"][ell - 1]) % q
    elif s == "dot_baseline":
        expect(d)
        vals = ((Y * comps[0] % q).sum(axis=1) + a * cr["z1"]) % q
    else:
        raise ParamError(f"unknown scheme {s!r}")
    if s in MASKED:
        vals = (vals + cr["mu"]) % q
    return Answer(query.server, query.phase, tuple(int(v) for v in vals))


def known_term(state: ClientState, params: SchemeParams, phase: int = 1) -> tuple[int, int]:
    """``(value, degree)`` of the top-degree answer term the user can cancel, or ``(0, 0)``."""
    s, q = params.scheme, params.q
    if s in ("baseline", "mask"):
        z = _vec(state.pads["z"])
        return int((z * z % q).sum() % q), 2
    if s == "lk_baseline":
        z = _vec(state.pads["z"])
        P = np.ones_like(z)
        for _ in range(params.k):
            P = P * z % q
        return int(P.sum() % q), params.k
    if s in ("baseline_plus", "mask_plus", "ipcr1", "ipcr1_plus"):
        z1, z2 = _vec(state.pads["z1"]), _vec(state.pads["z2"])
        return int((z1 * z1 % q * z2 % q).sum() % q), 3
    return 0, 0


def run_diff_algorithm(diffs: Sequence[int], wrap_threshold: int, q: int) -> int:
    """Sequential argmin from consecutive differences ``d_i - d_{i+1}`` in ``F_q``.

    A running sum ``d_theta - d_{i+1}`` in ``[wrap_threshold + 1, q - 1]`` is
    negative, so the current candidate stays; anything else moves it to
    ``i + 1`` (ties therefore advance).
    """
    theta = 1
    for i in range(1, len(diffs) + 1):
        run = sum(diffs[j - 1] for j in range(theta, i + 1)) % q
        if not wrap_threshold + 1 <= run <= q - 1:
            theta = i + 1
    return theta


def _argmin(values: Sequence[int], candidates: Sequence[int], maximize: bool = False) -> int | None:
    best = None
    for i in candidates:
        if best is None or (values[i - 1] > values[best - 1] if maximize else values[i - 1] < values[best - 1]):
            best = i
    return best


def decode(
    answers: Sequence[Answer],
    state: ClientState,
    params: SchemeParams,
    phase: int = 1,
) -> DecodeResult:
    """Strip interference with a Vandermonde solve and pick the index."""
    s, q = params.scheme, params.q
    n_servers = phase_servers(s, phase, params.k)
    answers = sorted(answers, key=lambda ans: ans.server)
    if len(answers) != n_servers or [ans.server for ans in answers] != list(range(1, n_servers + 1)):
        raise ParamError(f"need answers from servers 1..{n_servers}")
    lengths = {len(ans.values) for ans in answers}
    if len(lengths) != 1:
        raise ParamError("inconsistent answer lengths")
    if lengths.pop() != params.answer_length:
        raise ParamError(f"answers must have length {params.answer_length}")

    A = np.array([ans.values for ans in answers], dtype=np.int64)
    alphas = params.alphas[:n_servers]
    known, degree = known_term(state, params, phase)
    if degree:
        powers = np.array([pow(a, degree, q) for a in alphas], dtype=np.int64)
        A = (A - powers[:, None] * known % q) % q
    inv_row = np.array(VandermondeMatrix(alphas, params.field).inverse()[0], dtype=np.int64)
    values = tuple(int(v) for v in (inv_row[:, None] * A % q).sum(axis=0) % q)
    M = params.M
    everyone = range(1, M + 1)

    if s in DIFF:
        return DecodeResult(run_diff_algorithm(values, params.diff_threshold(), q), values)
    if s in TWO_PHASE and phase == 1:
        theta = frozenset(i for i in everyone if values[i - 1] == 0)
        only = next(iter(theta)) if len(theta) == 1 else None
        return DecodeResult(only, values, theta, no_counterfactual=not theta)
    if s in TWO_PHASE:
        if state.theta_set is None:
            raise ParamError("phase-2 decoding needs the phase-1 index set")
        theta = state.theta_set
        return DecodeResult(_argmin(values, sorted(theta)), values, theta, no_counterfactual=not theta)
    if s in ("ipcr1", "ipcr1_plus"):
        mutable = params.d - len(state.imm)
        ceiling = mutable * params.R**2 * (params.L1 if s == "ipcr1_plus" else 1)
        theta = frozenset(i for i in everyone if values[i - 1] <= ceiling)
        return DecodeResult(_argmin(values, sorted(theta)), values, theta, no_counterfactual=not theta)
    return DecodeResult(_argmin(values, everyone, maximize=s == "dot_baseline"), values)
