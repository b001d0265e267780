import math
from fractions import Fraction

import pytest

from slitlaw.interval import mpf_to_fraction
from slitlaw.numtheory import AlphaSpec, build_table, check_good_bound, slit_tail_sum
from slitlaw.surface import (
    CYLINDER,
    CYLINDER_DOUBLE,
    SLIT,
    brute_force_saddle_connections,
    build_surface,
    enumerate_candidates,
    lattice_vectors,
    systole_trajectory,
    torus_systole,
)

GOLDEN = (5**0.5 - 1) / 2


def candidate(cands, family, k):
    return next(c for c in cands if c.family == family and c.k == k)


def scan_primitive(alpha, bound, reach=3):
    """Oracle: primitive (m - n alpha, n) with |m|, |n| <= reach, one per +- pair."""
    out = set()
    for n in range(0, reach + 1):
        for m in range(-reach, reach + 1):
            if (n, m) == (0, 0) or (n == 0 and m < 0) or math.gcd(m, n) != 1:
                continue
            if math.hypot(m - n * alpha, n) <= bound:
                out.add((m, n))
    return out


def test_descriptor(main_surface):
    d = main_surface.descriptor()
    assert main_surface.raw_area == 2
    assert d["unit_area"] is False
    assert main_surface.slit.contains(slit_tail_sum(main_surface.table, 1).mid())


def test_unit_area_scales_candidates():
    raw = enumerate_candidates(build_surface(AlphaSpec.paper(), k_max=30), 10)
    unit = enumerate_candidates(build_surface(AlphaSpec.paper(), k_max=30, unit_area=True), 10)
    for a, b in zip(raw, unit):
        assert math.isclose(float(b.holonomy.v.mid()), float(a.holonomy.v.mid()) / math.sqrt(2), rel_tol=1e-14)


def test_rational_rejected():
    with pytest.raises(ValueError):
        build_surface(AlphaSpec.rational(3, 7))


def test_long_slit_rejected():
    with pytest.raises(ValueError):
        build_surface(AlphaSpec.paper(), k_max=30, slit_length=Fraction(3, 2))


def test_candidate_holonomies(main_surface):
    cands = enumerate_candidates(main_surface, 10)
    cyl = candidate(cands, CYLINDER, 2)
    assert cyl.holonomy.v.contains(7)
    assert check_good_bound(main_surface.table, 2).ok
    assert Fraction(1, 120) < mpf_to_fraction(cyl.holonomy.h.lo) < mpf_to_fraction(cyl.holonomy.h.hi) < Fraction(1, 112)
    slit = candidate(cands, SLIT, 2)
    assert slit.holonomy.v.contains(2) and slit.separating and not cyl.separating
    assert slit.holonomy.h.contains(slit_tail_sum(main_surface.table, 2).mid())
    for k in range(0, 10):
        one, two = candidate(cands, CYLINDER, k), candidate(cands, CYLINDER_DOUBLE, k)
        assert two.holonomy.h.contains(one.holonomy.h * 2) and two.holonomy.v.contains(one.holonomy.v * 2)


def test_candidates_sorted(main_surface):
    cands = enumerate_candidates(main_surface, 10)
    order = {CYLINDER: 0, CYLINDER_DOUBLE: 1, SLIT: 2}
    keys = [(order[c.family], c.k) for c in cands]
    assert keys == sorted(keys)


def test_insufficient_depth():
    with pytest.raises(ValueError):
        enumerate_candidates(build_surface(AlphaSpec.paper(), k_max=12), 20)


def test_square_lattice_brute_force():
    # (1, 0), (0, 1) and both diagonals (length sqrt 2 <= 1.5)
    found = {(v.m, v.n) for v in lattice_vectors(0, 1.5)}
    assert found == scan_primitive(0, 1.5) == {(1, 0), (0, 1), (1, 1), (-1, 1)}


def test_golden_brute_force_matches_scan():
    found = {(v.m, v.n) for v in lattice_vectors(GOLDEN, 1.2)}
    assert found == scan_primitive(GOLDEN, 1.2)
    assert (1, 0) in found and (1, 1) in found  # (1 - alpha, 1) has length 1.0705


def test_slit_candidate_appears_in_brute_force(main_surface):
    cands = enumerate_candidates(main_surface, 10)
    slit = candidate(cands, SLIT, 1)  # holonomy (S_1, 0): the slit itself
    found = brute_force_saddle_connections(main_surface, 0.5)
    assert any(v.shifted and v.n == 0 and abs(float(v.holonomy.h.mid()) - float(slit.holonomy.h.mid())) < 1e-30 for v in found)


def test_brute_force_overflow(main_surface):
    with pytest.raises(OverflowError):
        brute_force_saddle_connections(main_surface, 50, t=5, max_box=1000)


def test_golden_torus_systole():
    torus = build_surface(AlphaSpec.golden(), torus=True)
    traj = systole_trajectory(torus, [0.0])
    assert traj.delta[0].contains(1) and traj.argmin[0] == (CYLINDER, -1)
    assert not traj.has_split
    length, m, n = torus_systole(torus.alpha, 0)
    assert abs(float(length) - 1) < 1e-30 and (m, n) == (1, 0)


def test_cylinder_minima_match_lattice_reduction():
    torus = build_surface(AlphaSpec.paper(), torus=True, k_max=30)
    traj = systole_trajectory(torus, [0.5 * i for i in range(1, 30)], include_min_times=False)
    for t, d in zip(traj.t, traj.delta):
        length, _, _ = torus_systole(torus.alpha, t)
        assert abs(float(d.mid()) - float(length)) < 1e-12 * float(length)


def test_slit_minimum_length(main_surface):
    table = main_surface.table
    cands = enumerate_candidates(main_surface, 10)
    for k in range(2, 8):
        hol = candidate(cands, SLIT, k).holonomy
        assert hol.v.contains(2 * sum(table.q[1:k]))
        s_k = slit_tail_sum(table, k)
        q_prev = table.q[k - 1]
        shortest = float((hol.h * hol.v * 2).sqrt().mid())
        assert math.isclose(shortest, 2 * math.sqrt(float(s_k.mid()) * sum(table.q[1:k])), rel_tol=1e-12)
        # same order as sqrt(q_{k-1} S_k); the vertical sum is q_{k-1} up to a factor below 1.2
        assert 2 <= shortest / math.sqrt(q_prev * float(s_k.mid())) < 2 * math.sqrt(1.2)
        assert shortest > 2 * math.sqrt(q_prev / table.q[k + 1])


def test_systole_is_min_of_split(main_surface):
    traj = systole_trajectory(main_surface, [0.25 * i for i in range(80)], k_max=40)
    for d, s, n in zip(traj.delta, traj.delta_sep, traj.delta_nonsep):
        assert d.lo == min(s.lo, n.lo) and d.hi == min(s.hi, n.hi)


def test_candidates_at_least_one_before_coverage(main_surface):
    from slitlaw.holonomy import flow_length

    table = main_surface.table
    cands = enumerate_candidates(main_surface, 12)
    for c in cands:
        q = table.q[c.k] if c.family != SLIT else table.q[c.k - 1]
        if c.k < 1 or q < 2:
            continue
        for frac in (0.1, 0.5, 0.99):
            assert flow_length(c.holonomy, frac * math.log(q)).lo >= 1


def test_grid_beyond_coverage_rejected(main_surface):
    with pytest.raises(ValueError):
        systole_trajectory(main_surface, [0, 10**6], k_max=10)


def test_trajectory_deterministic(main_surface):
    grid = [0.5 * i for i in range(40)]
    assert systole_trajectory(main_surface, grid, k_max=40).to_csv() == systole_trajectory(main_surface, grid, k_max=40).to_csv()


def test_even_slit_variant():
    even = build_surface(AlphaSpec.paper(), k_max=30, slit_indices="even")
    table = build_table(AlphaSpec.paper(), 30)
    assert even.slit.contains(slit_tail_sum(table, 2, step=2).mid())
