"""Prime-field arithmetic and Vandermonde decoding.

Every protocol value lives in a prime field ``F_q``. Scheme code works on
canonical integer representatives for speed; :class:`FieldElement` is the
checked scalar type used at API boundaries and in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

# Deterministic Miller-Rabin witnesses: correct for every n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)

SCHEMES = (
    "baseline",
    "diff",
    "mask",
    "ipcr2",
    "ipcr1",
    "baseline_plus",
    "diff_plus",
    "mask_plus",
    "ipcr2_plus",
    "ipcr1_plus",
    "lk_baseline",
    "dot_baseline",
)


class FieldError(ValueError):
    """Raised for invalid field construction or arithmetic."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def smallest_prime_above(bound: int) -> int:
    """Return the least prime strictly greater than ``bound``."""
    if bound < 1:
        raise FieldError(f"bound must be >= 1, got {bound}")
    n = bound + 1
    while not is_prime(n):
        n += 1
    return n


def default_scaling(scheme: str, R: int, d: int, L1: int = 1) -> int:
    """Smallest admissible immutable-feature scale ``L`` for single-phase schemes."""
    if scheme == "ipcr1":
        return R * R * d + 1
    if scheme == "ipcr1_plus":
        return R * R * L1 * d + 1
    raise FieldError(f"scheme {scheme!r} has no scaling factor")


def min_field_bound(
    scheme: str,
    R: int,
    d: int,
    L1: int = 1,
    F: int = 0,
    L: int | None = None,
    k: int = 2,
) -> int:
    """Strict lower bound on the field modulus for ``scheme``.

    The returned value ``b`` means the scheme needs ``q > b``. Parameters a
    scheme does not use are ignored. ``L`` defaults to the smallest valid
    scaling factor for the single-phase variants; ``k`` is the norm order for
    ``lk_baseline``.
    """
    if scheme not in SCHEMES:
        raise FieldError(f"unknown scheme {scheme!r}")
    r2d = R * R * d
    if scheme in ("baseline", "mask", "ipcr2", "dot_baseline"):
        return r2d
    if scheme == "diff":
        return 2 * r2d
    if scheme in ("baseline_plus", "mask_plus", "ipcr2_plus"):
        return r2d * L1
    if scheme == "diff_plus":
        return 2 * r2d * L1
    if scheme == "lk_baseline":
        return R**k * d
    if L is None:
        L = default_scaling(scheme, R, d, L1)
    if scheme == "ipcr1":
        return F * (L - 1) * R * R + r2d
    # ipcr1_plus
    return F * (L - 1) * R * R + r2d * L1


class PrimeField:
    """The field of integers modulo a prime."""

    __slots__ = ("modulus",)

    def __init__(self, modulus: int):
        modulus = int(modulus)
        if modulus < 2 or not is_prime(modulus):
            raise FieldError(f"modulus {modulus} is not prime")
        self.modulus = modulus

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(int(value) % self.modulus, self)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.modulus == self.modulus

    def __hash__(self) -> int:
        return hash(("PrimeField", self.modulus))

    def __repr__(self) -> str:
        return f"PrimeField({self.modulus})"

    def inv(self, a: int) -> int:
        """Inverse of an integer representative via extended Euclid."""
        a %= self.modulus
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        r0, r1, s0, s1 = self.modulus, a, 0, 1
        while r1:
            quo = r0 // r1
            r0, r1 = r1, r0 - quo * r1
            s0, s1 = s1, s0 - quo * s1
        return s0 % self.modulus

    def signed(self, a: int) -> int:
        """Representative of ``a`` in ``(-q/2, q/2]``."""
        a %= self.modulus
        return a - self.modulus if a > self.modulus // 2 else a


@dataclass(frozen=True, slots=True)
class FieldElement:
    value: int
    field: PrimeField

    def __post_init__(self):
        if not 0 <= self.value < self.field.modulus:
            raise FieldError(f"{self.value} is not a canonical representative mod {self.field.modulus}")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldError(f"field mismatch: {self.field} vs {other.field}")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def _new(self, v: int) -> FieldElement:
        return FieldElement(v % self.field.modulus, self.field)

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(self.value - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(o - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._new(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.value)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return self._new(pow(self.value, e, self.field.modulus))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * self.field.inv(o)

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.modulus})"

    def inverse(self) -> FieldElement:
        return self._new(self.field.inv(self.value))


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def fe_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    return a - b


def fe_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def fe_inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def _check_alphas(alphas: Sequence[int], q: int) -> list[int]:
    vals = [int(a) % q for a in alphas]
    if any(v == 0 for v in vals):
        raise FieldError("Vandermonde evaluation points must be non-zero")
    if len(set(vals)) != len(vals):
        raise FieldError("Vandermonde evaluation points must be distinct")
    return vals


class VandermondeMatrix:
    """Order-``n`` Vandermonde matrix with entry ``(i, j) = alphas[i] ** j``."""

    def __init__(self, alphas: Sequence[FieldElement | int], field: PrimeField | None = None):
        if field is None:
            if not alphas or not isinstance(alphas[0], FieldElement):
                raise FieldError("a field is required when alphas are plain integers")
            field = alphas[0].field
        for a in alphas:
            if isinstance(a, FieldElement) and a.field != field:
                raise FieldError("alphas drawn from different fields")
        self.field = field
        self.alphas = tuple(_check_alphas([int(a) for a in alphas], field.modulus))
        self.order = len(self.alphas)
        self._inverse: list[list[int]] | None = None

    def entries(self) -> list[list[int]]:
        q = self.field.modulus
        return [[pow(a, j, q) for j in range(self.order)] for a in self.alphas]

    def encode(self, coeffs: Sequence[int]) -> list[int]:
        """Evaluate the polynomial with ``coeffs`` at every alpha."""
        q = self.field.modulus
        if len(coeffs) != self.order:
            raise FieldError(f"expected {self.order} coefficients, got {len(coeffs)}")
        return [sum(int(c) * pow(a, j, q) for j, c in enumerate(coeffs)) % q for a in self.alphas]

    def inverse(self) -> list[list[int]]:
        """Inverse matrix by Gauss-Jordan elimination over ``F_q``."""
        if self._inverse is None:
            q, n = self.field.modulus, self.order
            aug = [row + [int(i == r) for i in range(n)] for r, row in enumerate(self.entries())]
            for col in range(n):
                piv = next(r for r in range(col, n) if aug[r][col])
                aug[col], aug[piv] = aug[piv], aug[col]
                inv = self.field.inv(aug[col][col])
                aug[col] = [v * inv % q for v in aug[col]]
                for r in range(n):
                    if r != col and aug[r][col]:
                        f = aug[r][col]
                        aug[r] = [(v - f * p) % q for v, p in zip(aug[r], aug[col])]
            self._inverse = [row[n:] for row in aug]
        return self._inverse

    def solve(self, observations: Sequence[int]) -> list[int]:
        if len(observations) != self.order:
            raise FieldError(f"expected {self.order} observations, got {len(observations)}")
        q = self.field.modulus
        return [sum(r * int(o) for r, o in zip(row, observations)) % q for row in self.inverse()]


def vandermonde_solve(
    alphas: Sequence[FieldElement],
    observations: Sequence[FieldElement],
) -> list[FieldElement]:
    """Recover ``c`` from ``observations[i] = sum_j c[j] * alphas[i] ** j``.

    Raises:
        FieldError: on mismatched lengths, repeated or zero alphas, or mixed fields.
    """
    if len(alphas) != len(observations):
        raise FieldError("alphas and observations differ in length")
    if not alphas:
        return []
    field = alphas[0].field
    for o in observations:
        if o.field != field:
            raise FieldError("observations drawn from a different field")
    V = VandermondeMatrix(alphas, field)
    return [field(c) for c in V.solve([o.value for o in observations])]


def as_elements(values: Iterable[int], field: PrimeField) -> list[FieldElement]:
    return [field(v) for v in values]
