import itertools
import math
import random
from collections import Counter, defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcrkit.leakage import (
    BudgetExceeded,
    JointModel,
    LeakageError,
    Observable,
    exact_mi,
    grid_points,
    histogram_mi,
    ipcr_leakage,
    sample_tuples,
    sampled_mi,
)


def sq(x, y, h=None):
    h = h or (1,) * len(x)
    return sum(w * (b - a) ** 2 for a, b, w in zip(x, y, h))


def brute_mi(xs, pool, M, observe):
    """I(Y; O | X) straight from the definition.

    ``observe(x, ys)`` returns (probability, observation) pairs over the
    auxiliary randomness.
    """
    total = 0.0
    for x in xs:
        others = [p for p in pool if p != x]
        tuples = list(itertools.permutations(others, M))
        py = 1 / len(tuples)
        joint = defaultdict(float)
        po = defaultdict(float)
        for ys in tuples:
            for p, o in observe(x, ys):
                joint[ys, o] += py * p
                po[o] += py * p
        total += sum(pj * math.log(pj / (py * po[o])) for (ys, o), pj in joint.items())
    return total / len(xs)


def obs_baseline(x, ys):
    return [(1.0, tuple(sq(x, y) for y in ys))]


def obs_diff(x, ys):
    d = [sq(x, y) for y in ys]
    return [(1.0, tuple(b - a for a, b in zip(d, d[1:])))]


def obs_mask(d_min):
    def f(x, ys):
        d = [sq(x, y) for y in ys]
        out = []
        for mu in itertools.product(range(d_min), repeat=len(ys)):
            out.append((d_min ** -len(ys), tuple(a + m for a, m in zip(d, mu))))
        return out

    return f


TINY = [(2, 2, 2), (1, 2, 3), (2, 1, 2), (1, 3, 2)]


@pytest.mark.parametrize("R,d,M", TINY)
def test_exact_mi_matches_definition(R, d, M):
    model = JointModel.grid(R, d, M)
    pts = grid_points(R, d)
    ln = math.log(757)
    assert exact_mi(Observable.baseline(), model).value == pytest.approx(brute_mi(pts, pts, M, obs_baseline) / ln, abs=1e-12)
    assert exact_mi(Observable.diff(), model).value == pytest.approx(brute_mi(pts, pts, M, obs_diff) / ln, abs=1e-12)
    for dm in (2, 3):
        assert exact_mi(Observable.mask(dm), model).value == pytest.approx(brute_mi(pts, pts, M, obs_mask(dm)) / ln, abs=1e-12)


def test_single_record_two_ways():
    model = JointModel.grid(3, 2, 1)
    pts = grid_points(3, 2)
    h = 0.0
    for x in pts:
        c = Counter(sq(x, y) for y in pts if y != x)
        n = sum(c.values())
        h -= sum(v / n * math.log(v / n) for v in c.values())
    assert exact_mi(Observable.baseline(), model, math.e).value == pytest.approx(h / len(pts), abs=1e-12)


def test_histogram_hand_value():
    # two points, one record: the record is always the other point, so nothing leaks
    model = JointModel.explicit([(0,), (1,)], [(0,), (1,)], 1)
    assert histogram_mi(model).value == 0.0
    # three points on a line, one record: x=1 sees {1, 1}, the ends see {1, 4}
    model = JointModel.grid(2, 1, 1)
    expected = (0 + 2 * math.log(2)) / 3 / math.log(757)
    assert histogram_mi(model).value == pytest.approx(expected, abs=1e-12)
    assert exact_mi(Observable.baseline(), model).value == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("R,d,M", TINY + [(3, 2, 2)])
def test_histogram_route_equals_exact(R, d, M):
    model = JointModel.grid(R, d, M)
    assert abs(histogram_mi(model).value - exact_mi(Observable.baseline(), model).value) < 1e-9


def test_mask_with_unit_support_equals_baseline():
    model = JointModel.grid(3, 2, 3)
    assert exact_mi(Observable.mask(1), model).value == exact_mi(Observable.baseline(), model).value


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(1, 3), st.integers(1, 4))
def test_ordering_properties(R, d, M, d_min):
    if (R + 1) ** d - 1 < M:
        return
    model = JointModel.grid(R, d, M)
    base = exact_mi(Observable.baseline(), model).value
    assert exact_mi(Observable.diff(), model).value <= base + 1e-12
    assert exact_mi(Observable.mask(d_min), model).value <= base + 1e-12


def test_log_base_change():
    model = JointModel.grid(2, 2, 2)
    a = exact_mi(Observable.baseline(), model, 2).value
    b = exact_mi(Observable.baseline(), model, 757).value
    assert a * math.log(2) == pytest.approx(b * math.log(757), rel=1e-12)


def test_ipcr_observables_match_definition():
    R, d, M, L = 2, 2, 2, 9
    pts = grid_points(R, d)
    ln = math.log(757)
    for k in range(d + 1):
        sets = list(itertools.combinations(range(d), k))
        single = two = 0.0
        for imm in sets:
            h = tuple(L if j in imm else 1 for j in range(d))
            single += brute_mi(pts, pts, M, lambda x, ys: [(1.0, tuple(sq(x, y, h) for y in ys))])

            def phase(x, ys, imm=imm):
                e = tuple(all(y[j] == x[j] for j in imm) for y in ys)
                return [(1.0, (e, tuple(sq(x, y) for y, ok in zip(ys, e) if ok)))]

            two += brute_mi(pts, pts, M, phase)
        assert ipcr_leakage("single", R, d, M, k, L).value == pytest.approx(single / len(sets) / ln, abs=1e-12)
        assert ipcr_leakage("two_phase", R, d, M, k).value == pytest.approx(two / len(sets) / ln, abs=1e-12)


def test_two_phase_at_empty_set_is_baseline():
    base = exact_mi(Observable.baseline(), JointModel.grid(3, 3, 3)).value
    assert ipcr_leakage("two_phase", 3, 3, 3, 0).value == base


def test_weighted_observable():
    model = JointModel.grid(2, 2, 2)
    pts = grid_points(2, 2)
    w = (1, 3)
    ref = brute_mi(pts, pts, 2, lambda x, ys: [(1.0, tuple(sq(x, y, w) for y in ys))]) / math.log(757)
    assert exact_mi(Observable.baseline(w), model).value == pytest.approx(ref, abs=1e-12)


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        exact_mi(Observable.baseline(), JointModel.grid(6, 3, 6), budget=10_000)
    with pytest.raises(BudgetExceeded):
        histogram_mi(JointModel.grid(4, 2, 5))


def test_wraparound_check():
    model = JointModel.grid(2, 2, 2)
    exact_mi(Observable.baseline(), model, check_modulus=11)
    with pytest.raises(LeakageError, match="wrap"):
        exact_mi(Observable.baseline(), model, check_modulus=3)


def test_parallel_matches_serial():
    model = JointModel.grid(3, 2, 3)
    a = exact_mi(Observable.mask(2), model, workers=1).value
    b = exact_mi(Observable.mask(2), model, workers=2).value
    assert a == b


def test_exhaustive_sample_equals_exact():
    pts = grid_points(1, 2)
    xs = [(3, 3), (2, 0)]
    pool = pts
    tuples = list(itertools.permutations(range(len(pool)), 2))
    model = JointModel.explicit(xs, pool, 2)
    for obs in (Observable.baseline(), Observable.diff(), Observable.mask(2)):
        full = exact_mi(obs, model).value
        assert sampled_mi(obs, xs, pool, 2, 1, 0, tuples=tuples).value == pytest.approx(full, abs=1e-12)
        assert sampled_mi(obs, xs, pool, 2, 10_000, 0).value == pytest.approx(full, abs=1e-12)


def test_sampled_is_seeded_and_ordered():
    rng = random.Random(5)
    pool = [tuple(rng.randint(0, 7) for _ in range(3)) for _ in range(40)]
    xs = [tuple(rng.randint(0, 7) for _ in range(3)) for _ in range(6)]
    a = sampled_mi(Observable.baseline(), xs, pool, 4, 3000, 11)
    b = sampled_mi(Observable.baseline(), xs, pool, 4, 3000, 11)
    assert a.value == b.value
    diff = sampled_mi(Observable.diff(), xs, pool, 4, 3000, 11).value
    mask = sampled_mi(Observable.mask(3), xs, pool, 4, 3000, 11).value
    assert diff <= a.value + 1e-12 and mask <= a.value + 1e-12


def test_sampled_errors():
    with pytest.raises(LeakageError):
        sampled_mi(Observable.baseline(), [(0,)], [(1,), (2,)], 3, 10, 0)
    with pytest.raises(LeakageError):
        sampled_mi(Observable.baseline(), [], [(1,), (2,)], 1, 10, 0)
    with pytest.raises(LeakageError):
        sample_tuples(5, 2, 0, 0)


def test_histogram_rejects_small_pool():
    with pytest.raises(LeakageError):
        histogram_mi(JointModel.grid(2, 1, 3))


def test_model_rejects_bad_tuples():
    with pytest.raises(LeakageError):
        JointModel.explicit([(0,)], [(1,), (2,)], 2, tuples=[(0, 0)])


def test_report_json_keys():
    rep = exact_mi(Observable.mask(2), JointModel.grid(2, 1, 2))
    assert set(rep.to_dict()) == {"scheme", "variant", "params", "log_base", "value", "tuples_enumerated", "seconds"}
    assert rep.tuples_enumerated == 3 * 2
    assert rep.value >= 0
