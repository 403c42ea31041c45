"""Database leakage I(y_1..y_M; observation | x) by exact enumeration or sampling.

Every observable here is a per-record integer map ``f(x, y_i)`` followed by a
post-processing step (the raw tuple, consecutive differences, or additive
uniform masks). The observation distribution given ``x`` therefore depends
only on the multiset of per-record values, so the enumeration works on value
tuples weighted by how many record tuples produce them and caches by
histogram. Grid symmetry makes the cache hit often.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .field import default_scaling

DEFAULT_BUDGET = 20_000_000
DEFAULT_LOG_BASE = 757


class BudgetExceeded(RuntimeError):
    """The model is too large to enumerate; use :func:`sampled_mi`."""


class LeakageError(ValueError):
    pass


# --- models -----------------------------------------------------------------


def grid_points(R: int, d: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(R + 1), repeat=d))


@dataclass(frozen=True)
class JointModel:
    """Uniform x over ``xs``; records are uniform ordered M-tuples of distinct pool points.

    With ``tuples`` set, record tuples are instead uniform over that explicit
    list of pool-index tuples; tuples containing a point equal to ``x`` are
    skipped for that ``x``.
    """

    xs: tuple[tuple[int, ...], ...]
    pool: tuple[tuple[int, ...], ...]
    M: int
    tuples: tuple[tuple[int, ...], ...] | None = None
    label: str = "explicit"

    def __post_init__(self):
        if not self.xs:
            raise LeakageError("model needs at least one x")
        if self.M < 1:
            raise LeakageError("M must be positive")
        if len(self.pool) < self.M:
            raise LeakageError(f"pool of {len(self.pool)} points is smaller than M={self.M}")
        if self.tuples is not None:
            for t in self.tuples:
                if len(t) != self.M or len(set(t)) != self.M:
                    raise LeakageError(f"tuple {t} must hold {self.M} distinct pool indices")
                if any(not 0 <= i < len(self.pool) for i in t):
                    raise LeakageError(f"tuple {t} indexes outside the pool")

    @classmethod
    def grid(cls, R: int, d: int, M: int) -> JointModel:
        pts = tuple(grid_points(R, d))
        return cls(pts, pts, M, label=f"grid R={R} d={d}")

    @classmethod
    def explicit(cls, xs: Iterable[Sequence[int]], pool: Iterable[Sequence[int]], M: int, tuples=None) -> JointModel:
        tup = None if tuples is None else tuple(tuple(int(i) for i in t) for t in tuples)
        return cls(tuple(tuple(x) for x in xs), tuple(tuple(p) for p in pool), M, tup)

    def others(self, x: tuple[int, ...]) -> list[tuple[int, ...]]:
        return [p for p in self.pool if p != x]

    def tuple_count(self, x: tuple[int, ...]) -> int:
        if self.tuples is not None:
            return sum(1 for t in self.tuples if all(self.pool[i] != x for i in t))
        return math.perm(len(self.others(x)), self.M)

    def summary(self) -> dict:
        out = {"model": self.label, "M": self.M, "x_count": len(self.xs), "pool_size": len(self.pool)}
        if self.tuples is not None:
            out["tuple_count"] = len(self.tuples)
        return out


# --- observables ------------------------------------------------------------


@dataclass(frozen=True)
class RecordMap:
    """Per-record observation.

    ``sq``: sum_k h_k (y_k - x_k)^2, with ``h`` all ones when omitted.
    ``match``: the squared distance if ``y`` agrees with ``x`` on ``imm``
    (0-based), else -1; this encodes both the phase-1 indicator and the
    phase-2 distance.
    """

    kind: str = "sq"
    h: tuple[int, ...] | None = None
    imm: tuple[int, ...] = ()

    def __call__(self, x: Sequence[int], y: Sequence[int]) -> int:
        if self.kind == "match" and any(y[k] != x[k] for k in self.imm):
            return -1
        if self.h is None or self.kind == "match":
            return sum((b - a) ** 2 for a, b in zip(x, y))
        return sum(w * (b - a) ** 2 for a, b, w in zip(x, y, self.h))


@dataclass(frozen=True)
class Observable:
    """What the user sees about the database, before any field encoding.

    ``maps`` lists equally likely per-record maps (one per immutable set when
    averaging over a uniform fixed-size ``I``). ``post`` is ``tuple``,
    ``diff`` or ``mask``.
    """

    scheme: str
    maps: tuple[RecordMap, ...]
    post: str = "tuple"
    d_min: int = 1
    variant: str | None = None

    def __post_init__(self):
        if self.post not in ("tuple", "diff", "mask"):
            raise LeakageError(f"unknown post-processing {self.post!r}")
        if self.d_min < 1:
            raise LeakageError("d_min must be >= 1")
        if not self.maps:
            raise LeakageError("observable needs at least one record map")

    @classmethod
    def baseline(cls, weights: Sequence[int] | None = None) -> Observable:
        h = None if weights is None else tuple(weights)
        return cls("baseline" if h is None else "baseline_plus", (RecordMap("sq", h),))

    @classmethod
    def diff(cls, weights: Sequence[int] | None = None) -> Observable:
        h = None if weights is None else tuple(weights)
        return cls("diff" if h is None else "diff_plus", (RecordMap("sq", h),), "diff")

    @classmethod
    def mask(cls, d_min: int, weights: Sequence[int] | None = None) -> Observable:
        h = None if weights is None else tuple(weights)
        return cls("mask" if h is None else "mask_plus", (RecordMap("sq", h),), "mask", d_min)

    @classmethod
    def ipcr1(cls, d: int, imm_size: int, L: int) -> Observable:
        maps = []
        for imm in itertools.combinations(range(d), imm_size):
            maps.append(RecordMap("sq", tuple(L if k in imm else 1 for k in range(d))))
        return cls("ipcr1", tuple(maps), variant="single_phase")

    @classmethod
    def ipcr2(cls, d: int, imm_size: int) -> Observable:
        if imm_size == 0:
            # every record matches; the observation is the baseline one
            return cls("ipcr2", (RecordMap("sq"),), variant="two_phase")
        maps = tuple(RecordMap("match", imm=imm) for imm in itertools.combinations(range(d), imm_size))
        return cls("ipcr2", maps, variant="two_phase")


# --- reports ----------------------------------------------------------------


@dataclass
class LeakageReport:
    scheme: str
    value: float
    log_base: float
    variant: str | None = None
    params: dict = field(default_factory=dict)
    tuples_enumerated: int = 0
    seconds: float = 0.0

    def __post_init__(self):
        if self.value < 0:
            # entropy differences can dip a hair below zero in floating point
            if self.value < -1e-9:
                raise LeakageError(f"negative leakage {self.value}")
            self.value = 0.0

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "variant": self.variant,
            "params": self.params,
            "log_base": self.log_base,
            "value": self.value,
            "tuples_enumerated": self.tuples_enumerated,
            "seconds": self.seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# --- entropy engine ---------------------------------------------------------


def _entropy(weights: np.ndarray) -> float:
    w = weights[weights > 0].astype(np.float64)
    p = w / math.fsum(w)
    return -math.fsum(p * np.log(p))


def _merge(rows: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keys, inv = np.unique(rows, axis=0, return_inverse=True)
    return keys, np.bincount(inv.ravel(), weights=weights, minlength=len(keys))


def _grid_rows(hist: Sequence[tuple[int, int]], M: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
    """Value tuples with their counts of ordered distinct-record tuples."""
    values = np.array([v for v, _ in hist], dtype=np.int64)
    counts = np.array([c for _, c in hist], dtype=np.int64)
    K = len(values)
    if K**M > budget:
        raise BudgetExceeded(f"{K}^{M} value tuples exceed the budget of {budget}")
    idx = np.indices((K,) * M).reshape(M, -1)
    weight = np.ones(idx.shape[1], dtype=np.float64)
    for j in range(M):
        earlier = (idx[:j] == idx[j]).sum(axis=0)
        weight *= np.clip(counts[idx[j]] - earlier, 0, None)
    keep = weight > 0
    return values[idx[:, keep].T], weight[keep]


def _observation_entropy(rows: np.ndarray, weights: np.ndarray, post: str, d_min: int, modulus: int | None, budget: int) -> float:
    """H(O | x) minus H(O | y, x), i.e. the conditional mutual information at one x."""
    if modulus is not None:
        rows = np.where(rows >= 0, rows % modulus, rows)
    if post == "tuple":
        return _entropy(_merge(rows, weights)[1])
    if post == "diff":
        d = np.diff(rows, axis=1)
        if modulus is not None:
            d %= modulus
        return _entropy(_merge(d, weights)[1])
    if d_min == 1:
        return _entropy(_merge(rows, weights)[1])
    rows, weights = _merge(rows, weights)
    n, M = rows.shape
    values = np.unique(rows)
    outputs = np.unique((values[:, None] + np.arange(d_min)[None, :]).ravel())
    if modulus is not None:
        outputs = np.unique(outputs % modulus)
    dense = len(outputs) ** M
    sparse = n * d_min**M
    if min(dense, sparse) > budget:
        raise BudgetExceeded(f"mask convolution needs {min(dense, sparse)} cells, budget is {budget}")
    if dense <= sparse:
        return _dense_mask_entropy(rows, weights, values, outputs, d_min, modulus) - M * math.log(d_min)
    for j in range(M):
        shifted = np.repeat(rows, d_min, axis=0)
        shifted[:, j] += np.tile(np.arange(d_min), len(rows))
        if modulus is not None:
            shifted[:, j] %= modulus
        rows, weights = _merge(shifted, np.repeat(weights, d_min) / d_min)
    return _entropy(weights) - M * math.log(d_min)


def _dense_mask_entropy(rows, weights, values, outputs, d_min, modulus) -> float:
    M = rows.shape[1]
    K = len(values)
    P = np.zeros((K,) * M)
    np.add.at(P, tuple(np.searchsorted(values, rows[:, j]) for j in range(M)), weights)
    kernel = np.zeros((K, len(outputs)))
    for i, v in enumerate(values):
        for m in range(d_min):
            o = v + m if modulus is None else (v + m) % modulus
            kernel[i, np.searchsorted(outputs, o)] += 1 / d_min
    for _ in range(M):
        # contracts the leading axis and appends the output axis at the end
        P = np.tensordot(P, kernel, axes=([0], [0]))
    return _entropy(P.ravel())


def _grid_term(args) -> float:
    hist, M, post, d_min, modulus, budget = args
    rows, weights = _grid_rows(hist, M, budget)
    return _observation_entropy(rows, weights, post, d_min, modulus, budget)


def _histogram(rmap: RecordMap, x, points) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(Counter(rmap(x, y) for y in points).items()))


def _run_grid(observable: Observable, model: JointModel, modulus, budget, workers) -> tuple[float, int]:
    keys = []
    total_tuples = 0
    for x in model.xs:
        others = model.others(x)
        if len(others) < model.M:
            raise LeakageError(f"only {len(others)} pool points differ from x={x}; need M={model.M}")
        n = math.perm(len(others), model.M)
        for rmap in observable.maps:
            keys.append(_histogram(rmap, x, others))
            total_tuples += n
    unique = sorted(set(keys))
    jobs = [(k, model.M, observable.post, observable.d_min, modulus, budget) for k in unique]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            terms = list(pool.map(_grid_term, jobs))
    else:
        terms = [_grid_term(j) for j in jobs]
    table = dict(zip(unique, terms))
    return math.fsum(table[k] for k in keys) / len(keys), total_tuples


def _run_explicit(observable: Observable, model: JointModel, modulus, budget) -> tuple[float, int]:
    terms = []
    total_tuples = 0
    for x in model.xs:
        usable = [t for t in model.tuples if all(model.pool[i] != x for i in t)]
        if not usable:
            raise LeakageError(f"no sampled tuple avoids x={x}")
        total_tuples += len(usable) * len(observable.maps)
        for rmap in observable.maps:
            vals = np.array([rmap(x, p) for p in model.pool], dtype=np.int64)
            rows = vals[np.array(usable, dtype=np.int64)]
            terms.append(_observation_entropy(rows, np.ones(len(rows)), observable.post, observable.d_min, modulus, budget))
    return math.fsum(terms) / len(terms), total_tuples


def exact_mi(
    observable: Observable,
    model: JointModel,
    log_base: float = DEFAULT_LOG_BASE,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int | None = None,
    check_modulus: int | None = None,
) -> LeakageReport:
    """``I(Y; O | X)`` from the exact joint distribution.

    ``check_modulus`` recomputes with observations reduced mod ``q`` and
    raises if the value moves, which means ``q`` is too small to avoid
    wraparound.
    """
    start = time.perf_counter()

    def run(modulus):
        if model.tuples is not None:
            return _run_explicit(observable, model, modulus, budget)
        return _run_grid(observable, model, modulus, budget, workers)

    nats, n = run(None)
    if check_modulus is not None:
        wrapped, _ = run(check_modulus)
        if abs(wrapped - nats) > 1e-9:
            raise LeakageError(f"observations wrap modulo q={check_modulus}: {wrapped} vs {nats} nats")
    params = model.summary()
    if observable.post == "mask":
        params["d_min"] = observable.d_min
    return LeakageReport(
        observable.scheme,
        nats / math.log(log_base),
        log_base,
        observable.variant,
        params,
        n,
        time.perf_counter() - start,
    )


def histogram_mi(model: JointModel, log_base: float = DEFAULT_LOG_BASE, *, budget: int = 2_000_000) -> LeakageReport:
    """Baseline leakage by listing every record permutation and binning distance tuples.

    Computes ``-rho_X rho_Y sum_x sum_bins C log(rho_Y C)`` with ``C`` the
    number of permutations landing in each bin. Independent of
    :func:`exact_mi`'s value-tuple route, and only practical on small models.
    """
    if model.tuples is not None:
        raise LeakageError("the histogram formula assumes uniform priors over all permutations")
    start = time.perf_counter()
    sizes = {len(model.others(x)) for x in model.xs}
    if len(sizes) != 1:
        raise LeakageError("the histogram formula needs the same number of permutations for every x")
    P = sizes.pop()
    if P < model.M:
        raise LeakageError(f"only {P} pool points differ from x; need M={model.M}")
    n_perm = math.perm(P, model.M)
    if n_perm * len(model.xs) > budget:
        raise BudgetExceeded(f"{n_perm * len(model.xs)} permutations exceed the budget of {budget}")
    rho_x, rho_y = 1 / len(model.xs), 1 / n_perm
    terms = []
    for x in model.xs:
        others = model.others(x)
        dist = [sum((b - a) ** 2 for a, b in zip(x, y)) for y in others]
        bins = Counter(tuple(dist[i] for i in perm) for perm in itertools.permutations(range(P), model.M))
        terms.extend(c * math.log(rho_y * c) for c in bins.values())
    nats = -rho_x * rho_y * math.fsum(terms)
    return LeakageReport(
        "baseline",
        nats / math.log(log_base),
        log_base,
        "histogram",
        model.summary(),
        n_perm * len(model.xs),
        time.perf_counter() - start,
    )


def ipcr_leakage(
    variant: str,
    R: int,
    d: int,
    M: int,
    imm_size: int,
    L: int | None = None,
    log_base: float = DEFAULT_LOG_BASE,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int | None = None,
) -> LeakageReport:
    """I-PCR leakage averaged over uniform x on the grid and uniform ``I`` of size ``imm_size``."""
    if not 0 <= imm_size <= d:
        raise LeakageError(f"imm_size must lie in [0, {d}]")
    if variant in ("single", "single_phase", "ipcr1"):
        L = default_scaling("ipcr1", R, d) if L is None else L
        obs = Observable.ipcr1(d, imm_size, L)
    elif variant in ("two_phase", "ipcr2"):
        obs = Observable.ipcr2(d, imm_size)
    else:
        raise LeakageError(f"unknown I-PCR variant {variant!r}")
    rep = exact_mi(obs, JointModel.grid(R, d, M), log_base, budget=budget, workers=workers)
    rep.params.update({"imm_size": imm_size, "R": R, "d": d})
    if obs.variant == "single_phase":
        rep.params["L"] = L
    return rep


def sample_tuples(pool_size: int, M: int, count: int, seed: int) -> list[tuple[int, ...]]:
    """Up to ``count`` distinct ordered M-tuples of distinct pool indices, deterministic in ``seed``."""
    if pool_size < M:
        raise LeakageError(f"pool of {pool_size} points is smaller than M={M}")
    if count < 1:
        raise LeakageError("sample count must be >= 1")
    total = math.perm(pool_size, M)
    if count >= total:
        return list(itertools.permutations(range(pool_size), M))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    seen: dict[tuple[int, ...], None] = {}
    attempts = 0
    while len(seen) < count and attempts < 20 * count:
        t = tuple(int(i) for i in rng.choice(pool_size, M, replace=False))
        seen.setdefault(t)
        attempts += 1
    return list(seen)


def sampled_mi(
    observable: Observable,
    xs: Sequence[Sequence[int]],
    pool: Sequence[Sequence[int]],
    M: int,
    samples: int,
    seed: int,
    log_base: float = DEFAULT_LOG_BASE,
    *,
    tuples: Sequence[Sequence[int]] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> LeakageReport:
    """Leakage with records uniform over a seeded sample of permutations of ``pool``."""
    if not xs:
        raise LeakageError("empty x list")
    if tuples is None:
        tuples = sample_tuples(len(pool), M, samples, seed)
    model = JointModel.explicit(xs, pool, M, tuples)
    model = JointModel(model.xs, model.pool, M, model.tuples, label="sampled")
    rep = exact_mi(observable, model, log_base, budget=budget)
    rep.params["seed"] = seed
    return rep
