import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rahecke import estimates as E
from rahecke.boundary import PointFunction, RepParams, apply_wq_closed
from rahecke.coxeter import CoxeterError, CoxeterSystem, ball
from rahecke.hyperbolic import GeometryConfig, build_polygon, classify, wall_arc
from rahecke.walls import WallPoset, separating_walls

SYS = CoxeterSystem.polygon_group(5)
MODEL = build_polygon(5, SYS)
elements = st.lists(st.integers(0, 4), min_size=1, max_size=6).map(SYS.element)
angles = st.floats(0, 2 * math.pi)


def generic(w, z):
    return not any(bool(classify(H, z, MODEL)[1]) for H in separating_walls(w))


@given(elements, angles)
def test_admissible_is_brute_force(w, z):
    if not generic(w, z):
        return
    walls = separating_walls(w)
    beyond = {H for H in walls if bool(classify(H, z, MODEL)[0])}
    brute = {h.walls for h in WallPoset(walls, SYS).antichains() if h.walls and h.walls <= beyond}
    assert {h.walls for h in E.admissible(w, z, MODEL)} == brute


@given(elements, angles, st.floats(1, 4))
def test_normalized_sum_matches_representation(w, z, q):
    if not generic(w, z):
        return
    p = RepParams.uniform(q, 5)
    case = E._WCase(w, np.array([z], dtype=np.longdouble), MODEL, GeometryConfig())
    mid, _ = E.normalized_sum(case, p)
    full = apply_wq_closed(w, PointFunction.constant(1.0), p, MODEL)(np.array([z])).real[0]
    assert abs(mid[0] - q ** (-w.length / 2) * full) <= 1e-9 * max(1.0, abs(mid[0]))
    assert mid[0] >= float(case.tau_w[0])


@given(elements, angles)
def test_projection_nonnegative_and_s_bounded(w, z):
    if not generic(w, z):
        return
    for h in E.admissible(w, z, MODEL):
        p = E.proj_product(w, h, MODEL)
        assert p >= -1e-9
        s = E.s_value(w, z, h, MODEL)
        assert s <= p + 1e-12


def test_proj_product_rejects_near_side():
    w = SYS.parse("s0")
    h = WallPoset(separating_walls(SYS.parse("s2")), SYS).antichains()[1]
    with pytest.raises(CoxeterError):
        E.proj_product(w, h, MODEL)


def test_max_window():
    assert E.max_window([], 5.0) == 0
    assert E.max_window([0.1, 0.2, 0.3], 0.5) == 3
    assert E.max_window([0.0, 1.0, 1.5, 3.0], 4.0) == 2
    assert E.max_window([0.0, 1.0, 1.0, 3.0], 4.0) == 3
    # the window must stay inside [0, zw]
    assert E.max_window([2.5, 3.2], 3.0) == 2


def test_constants():
    assert abs(E.q_constant(RepParams.uniform(2.0, 5)) - 1 / math.sqrt(2)) < 1e-15
    assert abs(E.q_constant(RepParams.uniform(4.0, 5)) - 2.25) < 1e-15
    assert E.q_constant(RepParams.uniform(1.0, 5)) == 0
    geo = GeometryConfig()
    C = E.sandwich_constant(1 / math.sqrt(2), 5, geo)
    assert abs(C - (1 + 9 * 5 / math.sqrt(2) / (1 - math.exp(-1)))) < 1e-12
    with pytest.raises(ValueError):
        GeometryConfig(delta=0)


def test_statement_rows_inapplicable_when_not_in_far_side():
    w = SYS.parse("s0s2")
    other = WallPoset(separating_walls(SYS.parse("s3")), SYS).antichains()[1]
    rows = E.verify_statements(w, other, 1.0, MODEL)
    assert {r.statement for r in rows} == set(E.STATEMENTS)
    assert all(not r.applicable and r.passed for r in rows)


def test_statement_rows_pass_for_admissible_pairs():
    for w in ball(SYS, 4)[1::7]:
        for z in np.linspace(0.05, 6.2, 9):
            if not generic(w, z):
                continue
            for h in E.admissible(w, z, MODEL):
                rows = E.verify_statements(w, h, z, MODEL)
                assert all(r.passed for r in rows), [r for r in rows if not r.passed]


def test_verify_sandwich_single_point():
    rows = E.verify_sandwich(SYS.parse("s0s2s4"), 0.3, RepParams.uniform(2.0, 5), MODEL, 60.0)
    assert [r.statement for r in rows] == ["sandwich_lower", "sandwich_upper"]
    assert all(r.passed for r in rows)
    with pytest.raises(ValueError):
        E.verify_sandwich(SYS.parse("s0"), 0.3, RepParams.uniform(2.0, 5, 0.5), MODEL, 60.0)


def test_window_count_interval_validation():
    w = SYS.parse("s0s2s0s3")
    with pytest.raises(ValueError):
        E.window_count(w, 0.4, (0.0, 2.0), MODEL)


def test_sample_boundary_is_seeded_and_avoids():
    avoid = [wall_arc(H, MODEL)[0] for H in separating_walls(SYS.parse("s0s2s4s1"))]
    a = E.sample_boundary(32, 5, avoid)
    b = E.sample_boundary(32, 5, avoid)
    assert np.array_equal(a, b)
    for x in a:
        assert min(abs((float(x) - t + math.pi) % (2 * math.pi) - math.pi) for t in avoid) >= 1e-6


def test_small_sweep_report():
    rep = E.sweep(4, RepParams.uniform(2.0, 5), 12, 3, MODEL)
    assert not rep.failures()
    assert set(rep.checked_counts()) == set(E.STATEMENTS) | {"sandwich_lower", "sandwich_upper"}
    assert rep.aggregates["max_ratio"] <= rep.aggregates["C"]
    text = rep.to_csv()
    assert text.startswith(",".join(E.HEADER) + "\n") and "\r" not in text


def test_window_count_examples():
    assert E.window_count(SYS.identity, 0.7, (0.0, 0.0), MODEL) == 0
    w = SYS.parse("s0s2s0s3s1")
    z = 0.2
    assert generic(w, z)
    zw = float(E.boundary_gromov_o(E.orbit_point(w, MODEL), np.longdouble(z)))
    lo = max(0.0, zw - 1.0)
    small = E.window_count(w, z, (lo + 0.3, zw), MODEL)
    big = E.window_count(w, z, (lo, zw), MODEL)
    assert 0 <= small <= big


def test_proj_product_single_wall():
    s = SYS.gen(2)
    h = WallPoset(separating_walls(s), SYS).antichains()[1]
    assert abs(E.proj_product(s, h, MODEL) - float(E.dist(E.ORIGIN, E.orbit_point(s, MODEL))) / 2) < 1e-12
