"""Plaintext ground truth: exact integer distances, argmins and mask bounds.

Nothing here touches a finite field; these are the references the protocol
tests compare against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

Vector = Sequence[int]


@dataclass(frozen=True)
class Metric:
    kind: str = "squared_l2"
    weights: tuple[int, ...] | None = None
    k: int = 2

    def __post_init__(self):
        if self.kind not in ("squared_l2", "weighted_squared_l2", "lk_norm", "dot_product"):
            raise ValueError(f"unknown metric {self.kind!r}")
        if self.kind == "lk_norm" and (self.k < 2 or self.k % 2):
            raise ValueError(f"lk_norm needs an even k >= 2, got {self.k}")
        if self.kind == "weighted_squared_l2":
            if not self.weights:
                raise ValueError("weighted metric needs a weight vector")
            object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))

    @classmethod
    def squared_l2(cls) -> Metric:
        return cls()

    @classmethod
    def weighted(cls, w: Iterable[int]) -> Metric:
        return cls("weighted_squared_l2", tuple(w))

    @classmethod
    def lk(cls, k: int) -> Metric:
        return cls("lk_norm", k=k)

    @classmethod
    def dot(cls) -> Metric:
        return cls("dot_product")

    @property
    def maximize(self) -> bool:
        return self.kind == "dot_product"


L2 = Metric()


def distance(x: Vector, y: Vector, m: Metric = L2) -> int:
    """Exact integer distance (a similarity score for ``dot_product``)."""
    if len(x) != len(y):
        raise ValueError(f"dimension mismatch: {len(x)} vs {len(y)}")
    if m.kind == "squared_l2":
        return sum((b - a) ** 2 for a, b in zip(x, y))
    if m.kind == "weighted_squared_l2":
        if len(m.weights) != len(x):
            raise ValueError("weight vector dimension mismatch")
        return sum(w * (b - a) ** 2 for a, b, w in zip(x, y, m.weights))
    if m.kind == "lk_norm":
        return sum((b - a) ** m.k for a, b in zip(x, y))
    return sum(a * b for a, b in zip(x, y))


def distances(x: Vector, db: Iterable[Vector], m: Metric = L2) -> list[int]:
    return [distance(x, y, m) for y in db]


def _best(values: Sequence[int], candidates: Iterable[int], maximize: bool) -> int | None:
    best = None
    for i in candidates:
        v = values[i]
        if best is None or (v > values[best] if maximize else v < values[best]):
            best = i
    return best


def nn_index(x: Vector, db: Sequence[Vector], m: Metric = L2) -> int:
    """1-based index of the closest record; ties go to the smallest index."""
    if len(db) == 0:
        raise ValueError("empty database")
    vals = distances(x, db, m)
    return _best(vals, range(len(vals)), m.maximize) + 1


def theta_set(x: Vector, db: Sequence[Vector], imm: Iterable[int]) -> frozenset[int]:
    """1-based indices of records matching ``x`` on the 1-based immutable features."""
    cols = [k - 1 for k in imm]
    return frozenset(i + 1 for i, y in enumerate(db) if all(y[c] == x[c] for c in cols))


def imm_nn_index(x: Vector, db: Sequence[Vector], imm: Iterable[int], m: Metric = L2) -> int | None:
    """Closest record among those matching the immutable features, or ``None``."""
    theta = theta_set(x, db, imm)
    if not theta:
        return None
    vals = distances(x, db, m)
    return _best(vals, sorted(i - 1 for i in theta), m.maximize) + 1


def min_gap(x: Vector, db: Sequence[Vector], m: Metric = L2) -> int:
    """``min_{i != j} |d_i(x) - d_j(x)|`` over the integers."""
    vals = sorted(distances(x, db, m))
    return min(b - a for a, b in zip(vals, vals[1:]))


def d_min(db: Sequence[Vector], rejected: Sequence[Vector], m: Metric = L2) -> int:
    """Smallest pairwise distance gap over all rejected points; may be 0."""
    if len(db) < 2:
        raise ValueError("d_min needs at least two records")
    if not rejected:
        raise ValueError("d_min needs at least one rejected point")
    return min(min_gap(x, db, m) for x in rejected)


def empirical_d_min(db: Sequence[Vector], sample: Sequence[Vector], m: Metric = L2) -> int:
    """``d_min`` over a sample of rejected points; a zero result is an error."""
    if not sample:
        raise ValueError("empty sample")
    v = d_min(db, sample, m)
    if v == 0:
        raise ValueError("sample has a point equidistant from two records (d_min = 0)")
    return v


def closure_member(x: Vector, db: Sequence[Vector], rejected: Sequence[Vector], m: Metric = L2) -> bool:
    """Whether every pairwise gap at ``x`` dominates the same gap at every rejected point."""
    if any(tuple(x) == tuple(y) for y in db):
        raise ValueError("closure is defined only for points outside the database")
    dx = distances(x, db, m)
    dks = [distances(xk, db, m) for xk in rejected]
    M = len(dx)
    for i in range(M):
        for j in range(i + 1, M):
            gap = abs(dx[i] - dx[j])
            if any(gap < abs(dk[i] - dk[j]) for dk in dks):
                return False
    return True


def distance_gap(x: Vector, yi: Vector, yj: Vector, m: Metric = L2) -> int:
    """Signed ``d(x, y_i) - d(x, y_j)``."""
    return distance(x, yi, m) - distance(x, yj, m)
