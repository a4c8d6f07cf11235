import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_cliques, brute_rips, link_disjoint, link_set_a
from tdabc import complex as cx
from tdabc.persistence import compute_persistence

SQ2 = math.sqrt(2)


def _tri_complex():
    return cx.FilteredComplex.from_simplices([((0, 1, 2), 1.0)])


def _nonzero(D):
    return sorted((d.dim, d.birth, d.death) for d in D.all_intervals() if not d.zero_length)


def _random_complex(rng, n=8, q=3):
    P = rng.random((n, 2))
    return cx.build_rips(P, min(q, n - 1), max_filtration=float(rng.uniform(0.3, 1.2)))


# --- build_rips ----------------------------------------------------------------

def test_equilateral_triangle(triangle):
    K = cx.build_rips(triangle, 2, 2.0)
    by = K.n_simplices_by_dim()
    assert by == [3, 3, 1]
    for s, x in K.simplices.items():
        assert x == pytest.approx(0.0 if len(s) == 1 else 1.0, abs=1e-12)


def test_unit_square(square):
    K = cx.build_rips(square, 2, 2.0)
    edges = sorted(x for s, x in K.simplices.items() if len(s) == 2)
    assert edges == pytest.approx([1, 1, 1, 1, SQ2, SQ2])
    tris = [x for s, x in K.simplices.items() if len(s) == 3]
    assert tris == pytest.approx([SQ2] * 4)


def test_single_point():
    K = cx.build_rips(np.array([[0.3, 0.1]]), 2)
    assert K.simplices == {(0,): 0.0}


def test_rejects_dim_too_large(square):
    with pytest.raises(ValueError):
        cx.build_rips(square, 4)


def test_auto_threshold_is_enclosing_radius(square):
    D = cx.distance_matrix(square)
    assert cx.enclosing_radius(D) == pytest.approx(SQ2)
    K = cx.build_rips(square, 2)
    assert K.max_value() == pytest.approx(SQ2)


def test_brute_force_rips():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        q = int(rng.integers(1, min(4, n)))
        P = rng.random((n, int(rng.integers(1, 4))))
        eps = float(rng.uniform(0.1, 1.5))
        K = cx.build_rips(P, q, eps)
        ref = brute_rips(P, q, eps)
        assert set(K.simplices) == set(ref)
        for s, x in ref.items():
            assert K.filtration(s) == pytest.approx(x, abs=1e-12)


def test_restrict_matches_smaller_threshold():
    rng = np.random.default_rng(2)
    for _ in range(20):
        P = rng.random((9, 3))
        K = cx.build_rips(P, 3, 1.5)
        e = float(rng.uniform(0.1, 1.5))
        assert K.restrict(e).simplices == cx.build_rips(P, 3, e).simplices


def test_grid_snapping(square):
    K = cx.build_rips(square, 2, 2.0, grid_step=0.5)
    vals = sorted(set(K.simplices.values()))
    assert vals == [0.0, 1.0, 1.5]


# --- structure -------------------------------------------------------------------

def test_face_count():
    for q in range(6):
        s = tuple(range(q + 1))
        assert len(cx.all_faces(s)) == 2 ** (q + 1) - 1


def test_validate_catches_missing_face_and_non_monotone():
    with pytest.raises(ValueError):
        cx.FilteredComplex({(0,): 0.0, (0, 1): 1.0})
    with pytest.raises(ValueError):
        cx.FilteredComplex({(0,): 0.0, (1,): 2.0, (0, 1): 1.0})


def test_random_complexes_are_valid():
    rng = np.random.default_rng(3)
    for _ in range(20):
        K = _random_complex(rng)
        K.validate()
        for s, x in K.simplices.items():
            for f in cx.faces(s):
                assert K.filtration(f) <= x


def test_canonical_order_and_dump_round_trip(square):
    K = cx.build_rips(square, 2, 2.0)
    keys = [(x, len(s) - 1, s) for s, x in K.sorted_simplices()]
    assert keys == sorted(keys)
    buf = io.StringIO()
    K.dump(buf)
    buf.seek(0)
    assert cx.read_dump(buf).simplices == K.simplices


# --- star / closure / link -------------------------------------------------------

def test_star_of_vertex():
    K = _tri_complex()
    assert K.star((0,)) == {(0,): 0.0, (0, 1): 1.0, (0, 2): 1.0, (0, 1, 2): 1.0}


def test_star_of_maximal_simplex():
    K = _tri_complex()
    assert K.star((0, 1, 2)) == {(0, 1, 2): 1.0}


def test_star_excludes_simplices_without_vertex():
    # two triangles sharing the edge [3,4]: 2-3-4 and 3-4-5, plus a pendant edge [0,1]
    K = cx.FilteredComplex.from_simplices([((2, 3, 4), 1.0), ((3, 4, 5), 2.0), ((0, 1), 1.0)])
    S = K.star((4,))
    assert all(4 in s for s in S)
    assert set(S) == {(4,), (2, 4), (3, 4), (4, 5), (2, 3, 4), (3, 4, 5)}


def test_closure():
    K = _tri_complex()
    assert K.closure([(0, 1, 2)]) == set(cx.all_faces((0, 1, 2)))
    assert len(K.closure([(0, 1, 2)])) == 7
    assert K.closure([]) == set()
    assert K.closure([(0, 1), (1, 2)]) == {(0,), (1,), (2,), (0, 1), (1, 2)}


def test_link_triangle():
    K = _tri_complex()
    assert K.link((0,)) == {(1,): 1.0, (2,): 1.0, (1, 2): 1.0}


def test_link_isolated_vertex():
    K = cx.FilteredComplex.from_simplices([((0, 1), 1.0), (2,)])
    assert K.link((2,)) == {}


def test_link_weight_is_smallest_coface():
    K = cx.FilteredComplex.from_simplices([((0, 1), 0.5), ((0, 2), 2.0), ((1, 2), 0.7),
                                            ((0, 1, 2), 2.0)])
    lk = K.link((0,))
    assert lk == {(1,): 0.5, (2,): 2.0, (1, 2): 2.0}


def test_link_set_b_equals_set_a_for_vertices():
    rng = np.random.default_rng(4)
    for _ in range(100):
        K = _random_complex(rng, n=int(rng.integers(3, 9)))
        S = list(K.simplices)
        for v in K.vertices():
            assert set(K.link((v,))) == link_set_a(S, (v,))


def test_link_set_b_equals_disjoint_closed_star():
    rng = np.random.default_rng(5)
    for _ in range(30):
        K = _random_complex(rng, n=7)
        S = list(K.simplices)
        for s in S:
            assert set(K.link(s)) == link_disjoint(S, s)


def test_set_a_overcounts_for_edges():
    # for a non-vertex simplex Cl(St) - (St + Cl) keeps faces that touch sigma
    K = _tri_complex()
    assert (0, 2) in link_set_a(list(K.simplices), (0, 1))
    assert set(K.link((0, 1))) == {(2,)}


# --- restrict ----------------------------------------------------------------------

def test_restrict_square(square):
    K = cx.build_rips(square, 2, 2.0)
    V = K.restrict(1.0)
    assert V.n_simplices_by_dim() == [4, 4]
    assert compute_persistence(V.to_complex()).betti_at(1.0)[:2] == [1, 1]
    assert set(K.restrict(0.0).simplices) == {(i,) for i in range(4)}
    assert K.restrict(K.max_value()).simplices == K.simplices


def test_view_queries_match_materialised():
    rng = np.random.default_rng(6)
    K = _random_complex(rng, n=10)
    V = K.restrict(0.6)
    M = V.to_complex()
    for v in K.vertices():
        assert V.link((v,)) == M.link((v,))
        assert V.star((v,)) == M.star((v,))


# --- expansion / collapse --------------------------------------------------------------

def test_expansion_triangle_and_square():
    g = cx.FilteredComplex({(0,): 0, (1,): 0, (2,): 0, (0, 1): 1, (1, 2): 2, (0, 2): 3})
    K = cx.expansion(g, 2)
    assert K.filtration((0, 1, 2)) == 3
    sq = cx.FilteredComplex({(0,): 0, (1,): 0, (2,): 0, (3,): 0,
                             (0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): 1})
    assert cx.expansion(sq, 2).dimension() == 1


def test_expansion_matches_brute_cliques():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(2, 13))
        q = int(rng.integers(1, 5))
        edges = {}
        for a, b in itertools.combinations(range(n), 2):
            if rng.random() < 0.5:
                edges[(a, b)] = float(rng.integers(1, 6))
        xi = {(v,): 0.0 for v in range(n)}
        xi.update(edges)
        K = cx.expansion(cx.FilteredComplex(xi), q)
        assert K.simplices == brute_cliques(n, edges, q)


def test_collapse_keeps_triangle():
    g = cx.FilteredComplex({(0,): 0, (1,): 0, (2,): 0, (0, 1): 1, (1, 2): 2, (0, 2): 3})
    c = cx.collapse_edges(g)
    # [0,2] is dominated by 1 only from value 3 on, where it is the last edge: delayed to inf
    # and removed; [0,1], [1,2] stay. The diagram is unchanged either way.
    assert _nonzero(compute_persistence(cx.expansion(c, 2), top_dimension=True)) == \
        _nonzero(compute_persistence(cx.expansion(g, 2), top_dimension=True))


def test_collapse_undominated_graph_unchanged():
    # 4-cycle: nothing dominates anything
    sq = cx.FilteredComplex({(0,): 0, (1,): 0, (2,): 0, (3,): 0,
                             (0, 1): 1, (1, 2): 2, (2, 3): 3, (0, 3): 4})
    assert cx.collapse_edges(sq).simplices == sq.simplices


def test_collapse_cone_over_path():
    n = 6
    xi = {(v,): 0.0 for v in range(n + 1)}
    for v in range(n - 1):
        xi[(v, v + 1)] = 1.0
    for v in range(n):
        xi[(v, n)] = 1.0
    g = cx.FilteredComplex(xi)
    c = cx.collapse_edges(g, fixpoint=True)
    assert len(c.edges()) < len(g.edges())
    a = compute_persistence(cx.expansion(g, 2), top_dimension=True)
    b = compute_persistence(cx.expansion(c, 2), top_dimension=True)
    assert _nonzero(a) == _nonzero(b)


def test_collapsed_rips_keeps_e_max():
    rng = np.random.default_rng(8)
    P = rng.random((20, 2))
    K = cx.build_collapsed_rips(P, 3)
    R = cx.build_rips(P, 3)
    assert K.e_max == R.max_value()
    assert len(K) <= len(R)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 12), st.integers(1, 3))
def test_restrict_is_subcomplex(seed, n, q):
    rng = np.random.default_rng(seed)
    P = rng.random((n, 2))
    K = cx.build_rips(P, min(q, n - 1), 1.0)
    e = float(rng.random())
    V = K.restrict(e).to_complex()
    V.validate()
    assert all(x <= e for x in V.simplices.values())
