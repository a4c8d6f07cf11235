import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import betti_numbers, dense_persistence
from tdabc import complex as cx
from tdabc.persistence import (DiagramSet, PersistenceInterval as PI, compute_persistence,
                               get_persistence_interval_set, interval_int, select_interval,
                               sublevel_value, theta_transform)

INF = math.inf
SQ2 = math.sqrt(2)


def _pairs(D, dim, nonzero=False):
    return sorted((d.birth, d.death) for d in D[dim] if not (nonzero and d.zero_length))


def test_single_vertex():
    D = compute_persistence(cx.build_rips(np.zeros((1, 2)), 1))
    assert _pairs(D, 0) == [(0.0, INF)]


def test_two_points():
    D = compute_persistence(cx.build_rips(np.array([[0.0], [0.7]]), 1, 1.0))
    assert _pairs(D, 0) == [(0.0, pytest.approx(0.7)), (0.0, INF)]


def test_unit_square(square):
    D = compute_persistence(cx.build_rips(square, 2, 2.0))
    assert _pairs(D, 0) == [(0.0, 1.0)] * 3 + [(0.0, INF)]
    assert _pairs(D, 1, nonzero=True) == [(1.0, pytest.approx(SQ2))]
    # the two diagonals are born and filled at the same value
    assert sum(d.zero_length for d in D[1]) == 2


def test_top_dimension_is_left_out_by_default(square):
    K = cx.build_rips(square, 2, 2.0)
    assert compute_persistence(K)[2] == []
    top = compute_persistence(K, top_dimension=True)[2]
    assert len(top) == 1 and top[0].is_infinite


def test_matches_dense_reduction():
    rng = np.random.default_rng(0)
    for _ in range(60):
        n = int(rng.integers(2, 11))
        q = int(rng.integers(1, min(4, n)))
        P = rng.random((n, int(rng.integers(2, 5))))
        K = cx.build_rips(P, q, float(rng.uniform(0.2, 1.5)))
        D = compute_persistence(K, top_dimension=True)
        ref = dense_persistence(K.simplices, q)
        for d in range(q + 1):
            assert _pairs(D, d) == ref[d]


def test_betti_numbers_match_rank_computation():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(3, 12))
        P = rng.random((n, 2))
        q = min(3, n - 1)
        K = cx.build_rips(P, q, 1.5)
        D = compute_persistence(K, top_dimension=True)
        for eps in rng.choice(K.filtration_values(), size=3):
            sub = [s for s, x in K.simplices.items() if x <= eps]
            assert D.betti_at(eps) == betti_numbers(sub, q)


def test_deterministic(square):
    K = cx.build_rips(square, 2, 2.0)
    assert compute_persistence(K) == compute_persistence(K)


def test_h0_stability_under_perturbation():
    rng = np.random.default_rng(2)
    for _ in range(20):
        P = rng.random((10, 2))
        delta = 0.01
        Q = P + rng.uniform(-1, 1, P.shape) * delta / math.sqrt(2)
        a = [d for b, d in _pairs(compute_persistence(cx.build_rips(P, 1, 3.0)), 0)]
        b = [d for b, d in _pairs(compute_persistence(cx.build_rips(Q, 1, 3.0)), 0)]
        assert np.allclose(a[:-1], b[:-1], atol=2 * delta + 1e-12)


def test_csv_round_trip(square):
    D = compute_persistence(cx.build_rips(square, 2, 2.0))
    buf = io.StringIO()
    D.to_csv(buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "dim,birth,death"
    assert ",inf" in text
    E = DiagramSet.from_csv(io.StringIO(text))
    assert E.all_intervals() == D.all_intervals()


def test_max_eps_uses_uncollapsed_complex():
    P = np.random.default_rng(3).random((15, 2))
    a = compute_persistence(cx.build_rips(P, 3))
    b = compute_persistence(cx.build_collapsed_rips(P, 3))
    assert a.max_eps == b.max_eps


# --- theta / interval sets / selection --------------------------------------------

def test_theta_transform():
    assert theta_transform(PI(0, 0.0, INF), 2.5) == PI(0, 0.0, 2.5)
    assert theta_transform(PI(1, 0.3, 0.9), 2.5) == PI(1, 0.3, 0.9)
    assert interval_int(PI(1, 1.0, INF), 3.0) == 2.0


def test_interval_set_prefers_highest_dimension():
    D = DiagramSet([[PI(0, 0, INF)], [PI(1, 1, 2)], [PI(2, 1.5, 1.7)]], 3.0)
    assert get_persistence_interval_set(D) == [PI(2, 1.5, 1.7)]


def test_interval_set_falls_back_to_h0():
    D = DiagramSet([[PI(0, 0, 1), PI(0, 0, INF)], [], []], 3.0)
    assert get_persistence_interval_set(D) == [PI(0, 0, 1), PI(0, 0, INF)]


def test_interval_set_square(square):
    D = compute_persistence(cx.build_rips(square, 2, 2.0))
    got = get_persistence_interval_set(D)
    assert [(d.birth, d.death) for d in got] == [(1.0, pytest.approx(SQ2))]


def test_interval_set_skips_zero_length_unless_asked():
    D = DiagramSet([[PI(0, 0, INF)], [PI(1, 1, 1)]], 2.0)
    assert get_persistence_interval_set(D) == [PI(0, 0, INF)]
    assert get_persistence_interval_set(D, include_zero_length=True) == [PI(1, 1, 1)]


def test_interval_set_empty_raises():
    with pytest.raises(ValueError):
        get_persistence_interval_set(DiagramSet([[]], 0.0))


EXAMPLE = [PI(1, 0, 1), PI(1, 0.5, 3), PI(1, 2, INF)]


def test_maxint_example():
    assert select_interval(EXAMPLE, "MaxInt", 4.0) == PI(1, 0.5, 3)


def test_avgint_example():
    # lives 1, 2.5, 2 -> mean 1.833; |2 - 1.833| is smallest
    assert select_interval(EXAMPLE, "AvgInt", 4.0) == PI(1, 2, 4.0)


def test_singleton_under_every_strategy():
    d = [PI(1, 0.2, 0.9)]
    for s in ("MaxInt", "AvgInt", "RandInt"):
        assert select_interval(d, s, 1.0, np.random.default_rng(0)) == d[0]


def test_randint_covers_all_and_is_seeded():
    got = {select_interval(EXAMPLE, "RandInt", 4.0, np.random.default_rng(s)) for s in range(50)}
    assert len(got) == 3
    a = select_interval(EXAMPLE, "RandInt", 4.0, np.random.default_rng(7))
    assert a == select_interval(EXAMPLE, "RandInt", 4.0, np.random.default_rng(7))


def test_maxint_tie_goes_to_first_in_order():
    D = [PI(1, 1, 2), PI(1, 0, 1)]
    assert select_interval(D, "MaxInt", 3.0) == PI(1, 0, 1)


def test_unknown_strategy():
    with pytest.raises(ValueError):
        select_interval(EXAMPLE, "Median", 4.0)


def test_sublevel_value():
    d = PI(1, 1.0, 3.0)
    assert sublevel_value(d, "birth") == 1.0
    assert sublevel_value(d, "middle") == 2.0
    assert sublevel_value(d, "death") == 3.0


intervals = st.lists(st.tuples(st.floats(0, 5), st.floats(0, 5) | st.just(INF)), min_size=1,
                     max_size=12)


@settings(max_examples=200, deadline=None)
@given(intervals)
def test_maxint_has_longest_life(pairs):
    D = [PI(1, min(a, b), max(a, b)) for a, b in pairs]
    m = select_interval(D, "MaxInt", 6.0)
    assert all(m.life >= interval_int(d, 6.0) for d in D)
