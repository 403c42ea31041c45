import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcrkit.field import (
    FieldElement,
    FieldError,
    PrimeField,
    VandermondeMatrix,
    fe_inv,
    fe_mul,
    is_prime,
    min_field_bound,
    smallest_prime_above,
    vandermonde_solve,
)


def trial_division(n):
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


@given(st.integers(min_value=-10, max_value=200_000))
def test_is_prime_matches_trial_division(n):
    assert is_prime(n) == trial_division(n)


def test_is_prime_large_known_values():
    assert is_prime(2**31 - 1)
    assert is_prime(40009)
    assert not is_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7
    assert not is_prime(2**32 + 1)


@pytest.mark.parametrize("bound,expected", [(1, 2), (2, 3), (32, 37), (800, 809), (40000, 40009), (756, 757)])
def test_smallest_prime_above(bound, expected):
    assert smallest_prime_above(bound) == expected


def test_smallest_prime_above_rejects_nonpositive():
    with pytest.raises(FieldError):
        smallest_prime_above(0)


@given(st.sampled_from([2, 3, 13, 809, 40009, 2**31 - 1]), st.integers())
def test_inverse_round_trip(q, a):
    f = PrimeField(q)
    a %= q
    if a == 0:
        with pytest.raises(ZeroDivisionError):
            f.inv(a)
    else:
        assert a * f.inv(a) % q == 1
        assert int(fe_mul(f(a), fe_inv(f(a)))) == 1


def test_field_element_ops_and_mismatch():
    f = PrimeField(13)
    a, b = f(5), f(11)
    assert int(a + b) == 3
    assert int(a - b) == 7
    assert int(a * b) == 3
    assert int(a / b) == 5 * pow(11, -1, 13) % 13
    assert int(-a) == 8
    assert int(a**12) == 1
    with pytest.raises(FieldError):
        a + PrimeField(17)(1)


def test_prime_field_rejects_composite():
    with pytest.raises(FieldError):
        PrimeField(15)


def test_min_field_bound_values():
    assert min_field_bound("baseline", 4, 2) == 32
    assert min_field_bound("diff", 4, 2) == 64
    assert min_field_bound("mask_plus", 4, 2, L1=3) == 96
    assert min_field_bound("diff_plus", 4, 2, L1=3) == 192
    assert min_field_bound("lk_baseline", 3, 2, k=4) == 162
    assert min_field_bound("ipcr1", 3, 3, F=3, L=28) == 3 * 27 * 9 + 27
    with pytest.raises(FieldError):
        min_field_bound("nope", 1, 1)


@settings(max_examples=50)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=2**20))
def test_vandermonde_solve_recovers_coefficients(n, seed):
    rng = random.Random(seed)
    q = 809
    coeffs = [rng.randrange(q) for _ in range(n)]
    alphas = list(range(1, n + 1))
    obs = VandermondeMatrix(alphas, PrimeField(q)).encode(coeffs)
    # independent check of encode: Horner evaluation
    for a, o in zip(alphas, obs):
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * a + c) % q
        assert acc == o
    assert [int(e) for e in vandermonde_solve([PrimeField(q)(a) for a in alphas], [PrimeField(q)(o) for o in obs])] == coeffs


def test_vandermonde_inverse_is_inverse():
    f = PrimeField(13)
    V = VandermondeMatrix([1, 2, 3, 4], f)
    inv = V.inverse()
    E = V.entries()
    for i in range(4):
        for j in range(4):
            assert sum(E[i][k] * inv[k][j] for k in range(4)) % 13 == (i == j)


@pytest.mark.parametrize("alphas", [[1, 1, 2], [0, 1, 2], [1, 14]])
def test_vandermonde_rejects_bad_points(alphas):
    with pytest.raises(FieldError):
        VandermondeMatrix(alphas, PrimeField(13))


def test_field_element_is_frozen():
    e = FieldElement(3, PrimeField(7))
    with pytest.raises(AttributeError):
        e.value = 4
