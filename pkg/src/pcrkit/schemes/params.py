"""Scheme parameters, field-size validation and communication accounting."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from ..field import SCHEMES, PrimeField, default_scaling, min_field_bound, smallest_prime_above

PCR = ("baseline", "diff", "mask")
PLUS = ("baseline_plus", "diff_plus", "mask_plus")
IPCR = ("ipcr2", "ipcr1", "ipcr2_plus", "ipcr1_plus")
MASKED = ("mask", "mask_plus")
DIFF = ("diff", "diff_plus")
TWO_PHASE = ("ipcr2", "ipcr2_plus")
SINGLE_PHASE = ("ipcr1", "ipcr1_plus")
WEIGHTED = PLUS + ("ipcr2_plus", "ipcr1_plus")
MAX_K = 8
# Keeps every product of two representatives inside int64.
MAX_MODULUS = 2**31 - 1


class ParamError(ValueError):
    """Raised when scheme parameters violate a field-size or layout rule."""


def _bound_expr(scheme: str, k: int) -> str:
    return {
        "baseline": "R²d",
        "mask": "R²d",
        "ipcr2": "R²d",
        "dot_baseline": "R²d",
        "diff": "2R²d",
        "baseline_plus": "R²L₁d",
        "mask_plus": "R²L₁d",
        "ipcr2_plus": "R²L₁d",
        "diff_plus": "2R²L₁d",
        "lk_baseline": f"R^{k}d",
        "ipcr1": "F(L−1)R²+R²d",
        "ipcr1_plus": "F(L−1)R²+R²L₁d",
    }[scheme]


def servers_required(scheme: str, k: int = 2) -> int:
    if scheme in ("baseline", "diff", "mask", "dot_baseline"):
        return 2
    if scheme == "ipcr2_plus":
        return 4
    if scheme == "lk_baseline":
        return k
    return 3


def phase_servers(scheme: str, phase: int, k: int = 2) -> int:
    """Servers contacted in ``phase``; the two-phase weighted scheme uses 3 then 4."""
    if scheme == "ipcr2_plus" and phase == 1:
        return 3
    return servers_required(scheme, k)


def phases(scheme: str) -> tuple[int, ...]:
    return (1, 2) if scheme in TWO_PHASE else (1,)


@dataclass(frozen=True)
class SchemeParams:
    """Public parameters shared by the user and every server.

    Build through :meth:`create`, which fills in ``N``, the evaluation points
    ``alphas = (1, ..., N)``, default ``L``/``F`` and the smallest valid
    prime when ``q`` is not given.
    """

    scheme: str
    R: int
    d: int
    M: int
    N: int
    field: PrimeField
    alphas: tuple[int, ...]
    L: int | None = None
    L1: int = 1
    F: int | None = None
    d_min: int = 1
    k: int = 2
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def q(self) -> int:
        return self.field.modulus

    @classmethod
    def create(
        cls,
        scheme: str,
        R: int,
        d: int,
        M: int,
        q: int | None = None,
        *,
        L: int | None = None,
        L1: int = 1,
        F: int | None = None,
        d_min: int = 1,
        k: int = 2,
    ) -> SchemeParams:
        if scheme not in SCHEMES:
            raise ParamError(f"unknown scheme {scheme!r}")
        if scheme in SINGLE_PHASE:
            F = d if F is None else F
            if L is None:
                L = default_scaling(scheme, R, d, L1)
        if scheme in MASKED and d_min < 1:
            warnings.warn(f"d_min={d_min} leaves an empty mask support; using d_min=1 (no masking)", stacklevel=2)
            d_min = 1
        N = servers_required(scheme, k)
        if q is None:
            bound = min_field_bound(scheme, R, d, L1=L1, F=F or 0, L=L, k=k)
            if scheme in MASKED:
                # masked distances must not wrap around q
                bound = max(bound, R * R * L1 * d + d_min - 1)
            q = smallest_prime_above(max(bound, N))
        return cls(scheme, R, d, M, N, PrimeField(q), tuple(range(1, N + 1)), L, L1, F, d_min, k)

    def __post_init__(self):
        s = self.scheme
        if s not in SCHEMES:
            raise ParamError(f"unknown scheme {s!r}")
        if min(self.R, self.d, self.M) < 1:
            raise ParamError("R, d and M must be positive")
        if s in DIFF and self.M < 2:
            raise ParamError("difference schemes need M >= 2")
        if s == "lk_baseline" and (self.k < 2 or self.k % 2 or self.k > MAX_K):
            raise ParamError(f"lk_baseline needs an even k in [2, {MAX_K}], got {self.k}")
        need = servers_required(s, self.k)
        if self.N != need:
            raise ParamError(f"scheme {s} needs N={need} servers, got N={self.N}")
        if len(self.alphas) != self.N:
            raise ParamError("one evaluation point per server is required")
        alphas = [a % self.q for a in self.alphas]
        if 0 in alphas or len(set(alphas)) != len(alphas):
            raise ParamError("evaluation points must be distinct and non-zero mod q")
        if self.L1 < 1:
            raise ParamError("L1 must be >= 1")
        if s in SINGLE_PHASE:
            if self.F is None or not 0 <= self.F <= self.d:
                raise ParamError(f"F must lie in [0, d], got {self.F}")
            floor = self.R**2 * self.d * (self.L1 if s == "ipcr1_plus" else 1)
            if self.L is None or self.L <= floor:
                raise ParamError(f"L={self.L} must exceed {floor}")
        if s in MASKED and self.d_min < 1:
            raise ParamError("d_min must be >= 1")
        if self.q > MAX_MODULUS:
            raise ParamError(f"q={self.q} exceeds the supported maximum {MAX_MODULUS}")
        bound = min_field_bound(s, self.R, self.d, L1=self.L1, F=self.F or 0, L=self.L, k=self.k)
        if self.q <= bound:
            raise ParamError(f"q={self.q} ≤ {_bound_expr(s, self.k)}={bound}")
        if s in MASKED and self.q <= self.R**2 * self.L1 * self.d + self.d_min - 1:
            warnings.warn(
                f"q={self.q} may wrap masked distances (R²L₁d + d_min − 1 = "
                f"{self.R**2 * self.L1 * self.d + self.d_min - 1})",
                stacklevel=3,
            )

    @property
    def weighted(self) -> bool:
        return self.scheme in WEIGHTED

    @property
    def answer_length(self) -> int:
        return self.M - 1 if self.scheme in DIFF else self.M

    def diff_threshold(self) -> int:
        """Largest non-negative distance gap; larger field values are negative gaps."""
        return self.R**2 * self.d * (self.L1 if self.scheme == "diff_plus" else 1)

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "R": self.R,
            "d": self.d,
            "M": self.M,
            "N": self.N,
            "q": self.q,
            "alphas": list(self.alphas),
            "L": self.L,
            "L1": self.L1,
            "F": self.F,
            "d_min": self.d_min,
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> SchemeParams:
        return cls(
            raw["scheme"],
            raw["R"],
            raw["d"],
            raw["M"],
            raw["N"],
            PrimeField(raw["q"]),
            tuple(raw["alphas"]),
            raw.get("L"),
            raw.get("L1", 1),
            raw.get("F"),
            raw.get("d_min", 1),
            raw.get("k", 2),
        )


def comm_cost(params: SchemeParams) -> dict[str, int]:
    """Worst-case symbol counts (upload, download, total)."""
    s, d, M = params.scheme, params.d, params.M
    if s in ("baseline", "mask", "dot_baseline"):
        up, down = 2 * d, 2 * M
    elif s == "diff":
        up, down = 2 * d, 2 * (M - 1)
    elif s == "ipcr2":
        up, down = 9 * d + 3 * M, 6 * M
    elif s in ("ipcr1", "ipcr1_plus", "baseline_plus", "mask_plus"):
        up, down = 6 * d, 3 * M
    elif s == "diff_plus":
        up, down = 6 * d, 3 * (M - 1)
    elif s == "ipcr2_plus":
        up, down = 14 * d + 4 * M, 7 * M
    elif s == "lk_baseline":
        up, down = params.k * d, params.k * M
    else:
        raise ParamError(f"unknown scheme {s!r}")
    return {"upload": up, "download": down, "total": up + down}


def four_server_two_phase_cost(d: int, M: int) -> int:
    """Total cost of the alternative 4-server two-phase variant (arithmetic only)."""
    return 8 * d + 10 * M
