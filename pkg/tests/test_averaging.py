import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rahecke import averaging as A
from rahecke.boundary import ArcSet, BoundaryGrid, GridFunction, PointFunction, RepParams, matrix_coefficient
from rahecke.coxeter import CoxeterSystem, ball
from rahecke.hyperbolic import ORIGIN, build_polygon, dist, orbit_point

SYS = CoxeterSystem.polygon_group(5)
MODEL = build_polygon(5, SYS)


# nontrivial lattice elements start at distance 4.6
D, T, R = 7.5, 5.5, 1.9


@pytest.fixture(scope="module")
def small_ball():
    return A.enumerate_ball(MODEL, D)


@pytest.mark.parametrize("lattice_only", [True, False])
def test_enumeration_matches_brute_force(lattice_only):
    lb = A.enumerate_ball(MODEL, 5.0, lattice_only)
    # every word found is shorter than 7, so ball(7) is a valid superset
    assert max(len(w) for w in lb.words) < 7
    brute = {
        w.word
        for w in ball(SYS, 7)
        if (A.lattice_membership(w) or not lattice_only) and float(dist(ORIGIN, orbit_point(w, MODEL))) < 5.0
    }
    assert set(lb.words) == brute
    for w, d in zip(lb.words, lb.dist):
        assert abs(d - float(dist(ORIGIN, orbit_point(SYS.elem(w), MODEL)))) < 1e-9


def test_layer_inverse_closed(small_ball):
    layer = A.spherical_layer(T, R, small_ball)
    words = {small_ball.words[i] for i in layer.members}
    assert words
    for w in words:
        assert SYS.elem(w).inverse().word in words


def test_lattice_torsion_free():
    L = A.Lattice(SYS)
    assert L.index == 32
    for w in ball(SYS, 8):
        if w in L and not w.is_identity():
            assert not (w * w).is_identity()


@given(st.lists(st.integers(0, 4), max_size=12))
def test_parity_is_homomorphism(word):
    w = SYS.element(word)
    assert A.parity(w.word) == A.parity(word)


def test_word_geometry_matches_matrix_coefficient():
    V, W = ArcSet.between(2.0, 4.0), ArcSet.between(1.0, 3.0)
    plist = [RepParams.uniform(1.0, 5), RepParams.uniform(2.0, 5)]
    for w in ball(SYS, 5)[::17]:
        got = A.WordGeometry(w.word, MODEL).coefficient(V, W, plist)
        want = matrix_coefficient(w, V, W, plist, MODEL)
        assert np.allclose(got, want, rtol=1e-10, atol=1e-13)


def test_quotient_bound_dominates_polygon_diameter():
    info = A.quotient_diameter_bound(MODEL, mesh=6, radius=5)
    assert info["R"] >= MODEL.diameter()
    assert info["R"] >= info["sampled"] and info["rho"] > 0


def test_averaging_operator_properties(small_ball):
    grid = BoundaryGrid(512)
    one = GridFunction.sample(PointFunction.constant(1.0), grid)
    p = RepParams.uniform(2.0, 5)
    zero = A.averaging_apply(T, ArcSet.empty(), one, p, MODEL, R, small_ball)
    assert not np.any(zero.values)
    full = A.averaging_apply(T, ArcSet.full(), one, p, MODEL, R, small_ball)
    assert np.all(full.values.real >= 0) and np.allclose(full.values.imag, 0)
    # each normalized term has unit mass
    assert abs(np.mean(full.values.real) - 1) < 0.05
    bump = GridFunction.sample(PointFunction.from_callable(lambda t: np.maximum(np.cos(t), 0)), grid)
    out = A.averaging_apply(T, ArcSet.between(0.0, 2.0), bump, p, MODEL, R, small_ball)
    assert np.all(out.values.real >= -1e-15)
    with pytest.raises(ValueError):
        A.averaging_apply(T, ArcSet.full(), one, RepParams.uniform(2.0, 5, 0.3), MODEL, R, small_ball)


def test_uniform_norm_bounded_over_t():
    grid = BoundaryGrid(256)
    one = GridFunction.sample(PointFunction.constant(1.0), grid)
    lb = A.enumerate_ball(MODEL, 8.0)
    p = RepParams.uniform(1.0, 5)
    sup = [float(np.max(np.abs(A.averaging_apply(t, ArcSet.full(), one, p, MODEL, R, lb).values))) for t in (5.0, 5.5, 6.0)]
    assert max(sup) < 10


def test_trivial_experiment_hits_target():
    full = ArcSet.full()
    res = A.convergence_experiment(full, full, {"all": full}, [5.0, 6.0], [RepParams.uniform(2.0, 5)], MODEL, R)
    for row in res.rows:
        assert abs(row["value"] - 1) < 1e-12 and row["target"] == 1


def test_closed_arc_ties():
    U = ArcSet.between(1.0, 2.0)
    mask, ties = A.in_closed(U, np.array([1.0, 2.0, 1.5, 2.0 + 1e-6]))
    assert mask.tolist() == [True, True, True, False] and ties == 2


def test_layer_radius_guard(small_ball):
    with pytest.raises(ValueError):
        A.spherical_layer(T + 1, R, small_ball)
    assert math.isclose(small_ball.D, D)
