import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_valence_two_graph, slit_battery
from slitlaw.complexes import (
    CONE_A,
    Classification,
    Complex,
    Discontinuity,
    RationalSurface,
    ReturnData,
    ReturnInterval,
    SaddleConnection,
        area_bound,
    baby_bounds,
    chain_length,
    classify_conflicted,
    conflict_graph,
    detachment_exists,
    dichotomy_check,
    discontinuity_classes,
    disjoint,
    find_cycle,
    find_detachment,
    grow_complex,
    horizontal_connections,
    is_cycle,
    is_detached,
    polygon_area,
    return_data,
    saddle_connections,
    sheet_torus_complex,
)
from slitlaw.vertical import OrbitState, TwoSheetIET


@pytest.fixture(scope="module")
def main_rational(main_surface):
    return RationalSurface.from_surface(main_surface)


def segment_data(times):
    """Return data on [0, n) with unit intervals of the given return times."""
    n = len(times)
    discs = [Discontinuity(Fraction(i), CONE_A, 0 if i in (0, n) else 1) for i in range(n + 1)]
    ivs = [ReturnInterval(Fraction(i), Fraction(i + 1), t, Fraction(i), Fraction(i + 1)) for i, t in enumerate(times)]
    return ReturnData("segment", discs, ivs, width=Fraction(n))


# -- detachment ---------------------------------------------------------------


def test_detached_definition_example():
    assert is_detached({0.5, 10}, 1, 5)
    assert not is_detached({0.5, 3, 10}, 1, 5)
    assert not is_detached({10}, 1, 5)


def test_find_detachment_clauses():
    det = find_detachment([0.5, 10], N=4, d=1)
    assert det is not None and det.c == 0.5 and det.C == 2
    assert is_detached([0.5, 10], det.M, det.C)
    assert det.M * det.C < 10


def test_dense_set_has_no_detachment():
    S = [1.1**k for k in range(60)]  # every log-gap is log 1.1 < log(4) / 2
    assert find_detachment(S, N=4, d=1) is None
    assert not detachment_exists(S, N=4, d=1)


def test_empty_set_rejected():
    with pytest.raises(ValueError):
        find_detachment([], 2, 1)


@given(
    st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1, max_size=12),
    st.floats(min_value=1.01, max_value=1e4),
    st.integers(1, 6),
)
def test_detachment_matches_exhaustive_search(S, N, d):
    det = find_detachment(S, N, d)
    assert (det is not None) == detachment_exists(S, N, d)
    if det is not None:
        assert is_detached(S, det.M, det.C)
        assert det.C == pytest.approx(N ** (1 / (2 * d)))


# -- classification and graphs ----------------------------------------------


def test_two_intervals_one_conflicted():
    cls = classify_conflicted(segment_data([0.5, 10]), M=1)
    assert cls.conflicted == [1] and cls.late == [False, True]


def test_all_early_no_conflict():
    assert classify_conflicted(segment_data([0.5, 0.7, 0.2]), M=1).conflicted == []


def test_special_early_violation_reported():
    rd = segment_data([0.5, 10])
    rd.discontinuities[1] = Discontinuity(Fraction(1), CONE_A, 5)
    cls = classify_conflicted(rd, M=1)
    assert not cls.special_early_ok and cls.violations == [1]


def test_circle_transversal_rejected(main_rational):
    with pytest.raises(ValueError):
        classify_conflicted(return_data(main_rational, "circle"), 1.0)


def test_double_edge_cycle():
    cycle = find_cycle([0, 1], [(0, 1), (1, 0)])
    assert len(cycle) == 2 and is_cycle([(0, 1), (1, 0)], cycle)


def test_tree_has_no_cycle():
    assert find_cycle([0, 1, 2], [(0, 1), (1, 2)]) is None


@given(st.integers(0, 10**9))
def test_cycle_found_on_valence_two_graphs(seed):
    vertices, edges = random_valence_two_graph(random.Random(seed))
    cycle = find_cycle(vertices, edges)
    assert cycle is not None and is_cycle(edges, cycle)


def test_single_conflict_closes_a_loop():
    # cyclically consecutive conflicted points: one point gives a self-loop of valence 2
    rd = segment_data([0.5, 10, 10])
    g = conflict_graph(rd, classify_conflicted(rd, 1.0))
    assert len(g.edges) == 1 and g.edges[0].u == g.edges[0].v and g.valence() == {1: 2}


def test_graph_needs_conflicts():
    rd = segment_data([0.5, 0.7])
    with pytest.raises(ValueError):
        conflict_graph(rd, classify_conflicted(rd, 1.0))


# -- return data --------------------------------------------------------------


def test_golden_circle_return():
    golden = RationalSurface(Fraction(832040, 1346269), None)
    rd = return_data(golden, "circle")
    assert rd.d == 1 and rd.L == [1, 1]
    assert rd.discontinuities[0].x == (-golden.alpha) % 1


def test_slit_surface_circles_match_skew_product(main_rational):
    rd = return_data(main_rational, "circle")
    assert rd.d == 4
    iet = TwoSheetIET(main_rational.alpha, main_rational.slit)
    for iv in rd.intervals:
        x = (iv.left + iv.right) / 2
        image = iet.step(OrbitState(x, iv.sheet))
        assert image.x == iv.image_left + (x - iv.left)
        assert image.sheet == iv.image_sheet


def test_slit_return_data_of_main_surface(main_rational):
    rd = return_data(main_rational, "slit")
    assert rd.d == 4 and rd.H == [0, 5, 1, 0] and rd.L == [5, 6, 1]
    assert rd.excluded == ["slit side that exits immediately"]
    # classes of the relation coincide with the cone point hit
    classes = discontinuity_classes(rd)
    cones = [dc.cone for dc in rd.discontinuities]
    assert all((classes[i] == classes[j]) == (cones[i] == cones[j]) for i in range(4) for j in range(4))


def test_return_times_match_simulation(main_rational):
    rd = return_data(main_rational, "slit")
    s, a = main_rational.slit, main_rational.alpha
    for iv in rd.intervals:
        x = (iv.left + iv.right) / 2
        j, y = 0, x
        while True:
            j, y = j + 1, (y + a) % 1
            if y < s:
                break
        assert j == iv.time and y == iv.image_left + (x - iv.left)


# -- dichotomy ----------------------------------------------------------------


def test_empty_interior_is_first_branch(main_rational):
    empty = Complex([], Fraction(0))
    assert dichotomy_check(main_rational, empty, 2.0).branch == "all-trajectories-leave"


def test_main_surface_branches(main_rational):
    cx = sheet_torus_complex(main_rational)
    res = dichotomy_check(main_rational, cx, 1.5)
    assert res.branch == "short-curve-found" and res.bounds_ok and res.special_early_ok
    assert res.shrunk_length <= res.length_bound and res.shrink_time <= res.time_bound
    assert dichotomy_check(main_rational, cx, 3.0).branch == "all-trajectories-leave"


def test_battery_bounds_against_independent_minimization():
    count = 0
    for surf, N in slit_battery(40, seed=3):
        res = dichotomy_check(surf, sheet_torus_complex(surf), N, samples=32)
        assert res.branch == "short-curve-found"
        c, Lb, Tb = baby_bounds(res.d, N, res.A, res.h)
        assert res.length_bound == Lb and res.c == c == 1 / (2 * res.d)
        assert res.shrunk_length <= Lb and res.shrink_time <= Tb
        assert res.oracle_length <= Lb * (1 + 1e-9)
        assert chain_length(res.cycle, res.oracle_time) == pytest.approx(res.oracle_length)
        assert res.holonomy_bounds_ok and res.special_early_ok
        count += 1
    assert count == 40


# -- saddle connections, growth and area --------------------------------------


def test_saddle_connections_within_bound_and_not_self_disjoint(main_rational):
    conns = saddle_connections(main_rational, 3.0)
    assert conns and all(c.length() <= 3.0 for c in conns)
    assert all(disjoint(c, c, main_rational) is False for c in conns[:5])


@pytest.mark.parametrize("t", [0.0, 1.0])
def test_grow_complex_steps(main_rational, t):
    cx = sheet_torus_complex(main_rational)
    cx = Complex(list(cx.edges), Fraction(0), t=t)
    while cx.level < main_rational.edge_bound:
        gamma = next(c for c in saddle_connections(main_rational, 4.0, t) if c not in cx.edges)
        eps = cx.epsilon()
        grown, sigma = grow_complex(cx, gamma, main_rational)
        assert grown.level == cx.level + 1 and sigma.length(t) <= 6 * eps + 1e-12
        assert all(disjoint(sigma, e, main_rational) for e in cx.edges)
        assert grown.area <= 2 and area_bound(grown).ok
        cx = grown
    assert cx.level == 12
    with pytest.raises(ValueError):
        grow_complex(cx, gamma, main_rational)


def test_area_bound_examples():
    unit = [SaddleConnection(CONE_A, 0, Fraction(1), 0, "seam")] * 2 + [SaddleConnection(CONE_A, 0, Fraction(0), 1)] * 2
    square = Complex(unit, polygon_area([(0, 0), (1, 0), (1, 1), (0, 1)]))
    ab = area_bound(square)
    assert ab.bound == 16 and ab.area == 1 and ab.ok
    assert area_bound(Complex([], Fraction(0))).ok


def test_shoelace_triangle():
    assert polygon_area([(0, 0), (Fraction(1, 3), 0), (0, 3)]) == Fraction(1, 2)


def test_horizontal_connections(main_rational):
    hs = horizontal_connections(main_rational)
    assert sorted(c.kind for c in hs) == ["arc", "arc", "seam", "seam"]
    assert {c.h for c in hs if c.kind == "seam"} == {main_rational.slit}
