import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from rahecke.coxeter import CoxeterSystem, ball
from rahecke.hyperbolic import (
    ORIGIN,
    Isometry,
    boundary_vector,
    build_polygon,
    busemann,
    dist,
    from_disc,
    lorentz,
    orbit_point,
    point_at,
    point_side,
    represent,
    rn_derivative,
    to_disc,
    wall_arc,
    wall_geometry,
)
from rahecke.walls import Side, separating_walls, side

SYS = CoxeterSystem.polygon_group(5)
MODEL = build_polygon(5, SYS)
elements = st.lists(st.integers(0, 4), max_size=7).map(SYS.element)
angles = st.floats(0, 2 * math.pi, allow_nan=False)
radii = st.floats(0, 4)


def test_right_angles_and_involutions(model):
    assert max(abs(a - math.pi / 2) for a in model.angles()) < 1e-12
    for r in model.reflections:
        assert (r @ r).close_to(Isometry.identity(), 1e-15)
        assert r.form_residual() < 1e-15


def test_commuting_generators_commute_geometrically(model):
    R = model.reflections
    for i in range(5):
        j = (i + 1) % 5
        assert (R[i] @ R[j]).close_to(R[j] @ R[i], 1e-14)
        k = (i + 2) % 5
        assert not (R[i] @ R[k]).close_to(R[k] @ R[i], 1e-3)


@given(elements, elements)
def test_representation_is_homomorphism(a, b):
    lhs = represent(a * b, MODEL)
    rhs = represent(a, MODEL) @ represent(b, MODEL)
    assert np.max(np.abs(lhs.matrix - rhs.matrix)) <= 1e-12 * max(1.0, float(np.max(np.abs(rhs.matrix))))


@given(angles, radii, angles, radii, angles, radii, angles)
def test_busemann_cocycle(a1, r1, a2, r2, a3, r3, b):
    x, y, z = point_at(a1, r1), point_at(a2, r2), point_at(a3, r3)
    assert abs(busemann(b, x, y) + busemann(b, y, z) - busemann(b, x, z)) < 1e-12
    # 1-Lipschitz
    assert abs(busemann(b, x, y)) <= dist(x, y) + 1e-12


@given(angles, st.floats(0.5, 10))
def test_busemann_along_ray(b, t):
    # moving toward the boundary point decreases distance to it by t
    assert abs(busemann(b, ORIGIN, point_at(b, t)) + t) < 1e-9


@given(elements, angles)
def test_apply_boundary_matches_matrix(w, theta):
    g = represent(w, MODEL)
    v = g.matrix.astype(float) @ boundary_vector(theta).astype(float)
    expect = math.atan2(v[1], v[0]) % (2 * math.pi)
    got = float(g.apply_boundary(theta))
    d = abs((got - expect + math.pi) % (2 * math.pi) - math.pi)
    assert d < 1e-9


@given(elements, angles)
def test_rn_chain_rule(w, theta):
    # d(gh)_*l/dl (b) = r_g(b) r_h(g^-1 b); with h = g^-1 the product is 1
    g = represent(w, MODEL)
    gi = g.inverse()
    lhs = rn_derivative(g, theta) * rn_derivative(gi, gi.apply_boundary(theta))
    assert abs(lhs - 1) < 1e-9


def test_pushforward_mass_exact_for_short_words():
    th = 2 * np.pi * np.arange(4096) / 4096
    for w in ball(SYS, 3):
        assert abs(np.mean(rn_derivative(represent(w, MODEL), th)) - 1) < 1e-12


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_disc_round_trip(x, y):
    z = np.array([x, y]) * 0.99 / max(1.0, math.hypot(x, y))
    p = from_disc(z)
    assert abs(lorentz(p, p) + 1) < 1e-12
    assert np.allclose(to_disc(p), z, atol=1e-15)


@given(elements)
def test_wall_normals_and_sides(w):
    wo = orbit_point(w, MODEL)
    for H in separating_walls(w):
        g = wall_geometry(H, MODEL)
        assert abs(lorentz(g.normal, g.normal) - 1) < 1e-9 * max(1.0, float(g.normal[2] ** 2))
        assert point_side(H, ORIGIN, MODEL) is Side.NEAR
        assert point_side(H, wo, MODEL) is side(H, w) is Side.FAR
        # arc endpoints lie on the wall
        for t in wall_arc(H, MODEL):
            assert abs(float(lorentz(boundary_vector(t), g.normal))) < 1e-9 * float(g.normal[2])
