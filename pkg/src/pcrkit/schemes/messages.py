"""Client state, shared server randomness and the wire messages."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .params import DIFF, MASKED, TWO_PHASE, WEIGHTED, ParamError, SchemeParams


@dataclass(frozen=True)
class Query:
    server: int
    phase: int
    components: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return sum(len(c) for c in self.components)


@dataclass(frozen=True)
class Answer:
    server: int
    phase: int
    values: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DecodeResult:
    theta: int | None
    values: tuple[int, ...]
    theta_set: frozenset[int] | None = None
    no_counterfactual: bool = False


def _user_pad_layout(params: SchemeParams) -> dict[str, int]:
    s, d, M = params.scheme, params.d, params.M
    if s in ("baseline", "diff", "mask", "lk_baseline", "dot_baseline"):
        return {"z": d}
    if s in TWO_PHASE:
        layout = {"z1": d, "z2": d, "z3": M, "z4": d}
        if s == "ipcr2_plus":
            layout["z5"] = d
        return layout
    return {"z1": d, "z2": d}


@dataclass(frozen=True)
class ClientState:
    """Everything the user keeps private during one session.

    ``imm`` holds 1-based immutable feature indices; ``w`` the actionability
    weights. ``pads`` are the one-time pads, sampled fresh per session.
    ``theta_set`` is filled in after the first phase of a two-phase scheme.
    """

    x: tuple[int, ...]
    pads: Mapping[str, tuple[int, ...]]
    imm: tuple[int, ...] | None = None
    w: tuple[int, ...] | None = None
    theta_set: frozenset[int] | None = None

    @classmethod
    def create(
        cls,
        params: SchemeParams,
        x: Sequence[int],
        imm: Sequence[int] | None = None,
        w: Sequence[int] | None = None,
        rng: np.random.Generator | None = None,
        pads: Mapping[str, Sequence[int]] | None = None,
    ) -> ClientState:
        """Validate the user's inputs and draw pads from ``rng``.

        With neither ``rng`` nor ``pads`` every pad is zero, which is only
        useful for tests.
        """
        x = tuple(int(v) for v in x)
        if len(x) != params.d:
            raise ParamError(f"x has dimension {len(x)}, expected {params.d}")
        s = params.scheme
        if s.startswith("ipcr"):
            if imm is None:
                raise ParamError(f"scheme {s} needs an immutable set")
            imm = tuple(sorted(set(int(k) for k in imm)))
            if any(not 1 <= k <= params.d for k in imm):
                raise ParamError(f"immutable indices must lie in [1, {params.d}]")
            if params.F is not None and s in ("ipcr1", "ipcr1_plus") and len(imm) > params.F:
                raise ParamError(f"|I|={len(imm)} exceeds F={params.F}")
        elif imm is not None:
            raise ParamError(f"scheme {s} takes no immutable set")
        if s in WEIGHTED:
            if w is None:
                raise ParamError(f"scheme {s} needs a weight vector")
            w = tuple(int(v) for v in w)
            if len(w) != params.d:
                raise ParamError(f"w has dimension {len(w)}, expected {params.d}")
            if any(not 1 <= v <= params.L1 for v in w):
                raise ParamError(f"weights must lie in [1, {params.L1}]")
        elif w is not None:
            raise ParamError(f"scheme {s} takes no weight vector")

        layout = _user_pad_layout(params)
        if pads is not None:
            got = {}
            for name, n in layout.items():
                vals = tuple(int(v) % params.q for v in pads[name])
                if len(vals) != n:
                    raise ParamError(f"pad {name} must have length {n}")
                got[name] = vals
        elif rng is not None:
            got = {name: tuple(int(v) for v in rng.integers(0, params.q, n)) for name, n in layout.items()}
        else:
            got = {name: (0,) * n for name, n in layout.items()}
        return cls(x, got, imm, w)

    def with_theta_set(self, theta: frozenset[int]) -> ClientState:
        return replace(self, theta_set=frozenset(theta))

    # derived vectors

    def h1(self, d: int) -> tuple[int, ...]:
        imm = set(self.imm or ())
        return tuple(1 if k in imm else 0 for k in range(1, d + 1))

    def h2(self, M: int) -> tuple[int, ...]:
        if self.theta_set is None:
            raise ParamError("phase-2 queries need the phase-1 index set")
        return tuple(1 if i in self.theta_set else 0 for i in range(1, M + 1))

    def h(self, params: SchemeParams) -> tuple[int, ...]:
        """Single-phase scaling vector: ``L`` on immutable features, 1 or ``w`` elsewhere."""
        imm = set(self.imm or ())
        base = self.w if params.scheme == "ipcr1_plus" else (1,) * params.d
        return tuple(params.L if k in imm else base[k - 1] for k in range(1, params.d + 1))

    def phase2_weights(self) -> tuple[int, ...]:
        imm = set(self.imm or ())
        return tuple(1 if k in imm else wk for k, wk in enumerate(self.w, start=1))


def _shared_layout(params: SchemeParams, phase: int) -> dict[str, tuple[int, ...]]:
    s, M = params.scheme, params.M
    n = params.answer_length
    if s in ("baseline", "diff", "mask", "dot_baseline"):
        layout = {"z1": (n,)}
    elif s == "lk_baseline":
        layout = {"zl": (params.k - 1, M)}
    elif s in TWO_PHASE:
        if phase == 1:
            layout = {"z1": (M,), "z2": (M,), "rho": (M,)}
        else:
            layout = {"z3": (M,), "z4": (M,)}
            if s == "ipcr2_plus":
                layout["z5"] = (M,)
    else:
        layout = {"z1": (n,), "z2": (n,)}
    if s in MASKED:
        layout["mu"] = (M,)
    return layout


@dataclass(frozen=True)
class CommonRandomness:
    """Randomness shared by every server in a session and hidden from the user.

    ``rho`` is uniform on the non-zero field elements, ``mu`` uniform on
    ``{0, ..., d_min - 1}``; everything else is uniform on ``F_q``.
    """

    phase: int
    values: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    @classmethod
    def draw(cls, params: SchemeParams, rng: np.random.Generator, phase: int = 1) -> CommonRandomness:
        vals = {}
        for name, shape in _shared_layout(params, phase).items():
            if name == "rho":
                vals[name] = rng.integers(1, params.q, shape, dtype=np.int64)
            elif name == "mu":
                vals[name] = rng.integers(0, params.d_min, shape, dtype=np.int64)
            else:
                vals[name] = rng.integers(0, params.q, shape, dtype=np.int64)
        return cls(phase, vals)

    @classmethod
    def zeros(cls, params: SchemeParams, phase: int = 1, **overrides) -> CommonRandomness:
        """All-zero pads (``rho`` = 1); keyword overrides replace single entries."""
        vals = {}
        for name, shape in _shared_layout(params, phase).items():
            fill = 1 if name == "rho" else 0
            vals[name] = np.full(shape, fill, dtype=np.int64)
        for name, v in overrides.items():
            arr = np.asarray(v, dtype=np.int64)
            if name not in vals or arr.shape != vals[name].shape:
                raise ParamError(f"bad override {name!r}")
            vals[name] = arr % params.q
        return cls(phase, vals)

    def with_values(self, **overrides) -> CommonRandomness:
        vals = dict(self.values)
        vals.update({k: np.asarray(v, dtype=np.int64) for k, v in overrides.items()})
        return CommonRandomness(self.phase, vals)


def is_diff(params: SchemeParams) -> bool:
    return params.scheme in DIFF
