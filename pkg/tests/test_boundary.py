import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.integrate import quad

from rahecke.boundary import (
    ArcSet,
    BoundaryGrid,
    GridFunction,
    PointFunction,
    RepParams,
    apply_sq,
    apply_w1,
    apply_wq_closed,
    apply_wq_composed,
    constant_mass,
    hermitian_residual,
    inner,
    matrix_coefficient,
    operator_matrix,
    tau_arc_integral,
)
from rahecke.coxeter import CoxeterSystem
from rahecke.hyperbolic import build_polygon, orbit_point, point_at, represent, rn_derivative

SYS = CoxeterSystem.polygon_group(5)
MODEL = build_polygon(5, SYS)
elements = st.lists(st.integers(0, 4), max_size=5).map(SYS.element)
qs = st.floats(1, 4)
params = st.builds(lambda q, e: RepParams(tuple(q), e), st.lists(qs, min_size=5, max_size=5), st.sampled_from([0.0, 0.7, -0.3]))
F = PointFunction.from_callable(lambda t: np.exp(np.cos(t)) + 1j * np.sin(3 * t))
POINTS = np.random.default_rng(7).uniform(0, 2 * math.pi, 200)


def arcs():
    return st.builds(lambda a, L: ArcSet([(a, L)]), st.floats(0, 2 * math.pi), st.floats(0.05, 3.0))


@given(st.integers(0, 4), params)
def test_quadratic_relation_pointwise(s, p):
    sf = apply_sq(s, F, p, MODEL)
    lhs = apply_sq(s, sf, p, MODEL)(POINTS, False)
    rhs = (p.q[s] - 1) * sf(POINTS, False) + p.q[s] * F(POINTS, False)
    assert np.nanmax(np.abs(lhs - rhs)) < 1e-9


@given(elements, params)
def test_closed_form_matches_composition(w, p):
    a = apply_wq_closed(w, F, p, MODEL)(POINTS, False)
    b = apply_wq_composed(w, F, p, MODEL)(POINTS, False)
    assert np.nanmax(np.abs(a - b)) < 1e-9


@given(elements, st.sampled_from([0.0, 0.7]))
def test_q_one_is_weyl_action(w, eps):
    p = RepParams.uniform(1.0, 5, eps)
    a = apply_wq_closed(w, F, p, MODEL)(POINTS, False)
    b = apply_w1(w, F, MODEL, eps)(POINTS, False)
    assert np.nanmax(np.abs(a - b)) < 1e-9


def test_degenerate_points_raise_in_strict_mode():
    from rahecke.hyperbolic import wall_arc
    from rahecke.walls import DegenerateError, wall

    t0 = wall_arc(wall(SYS.gen(0)), MODEL)[0]
    f = apply_sq(0, F, RepParams.uniform(2.0, 5), MODEL)
    with pytest.raises(DegenerateError):
        f(np.array([t0]))
    assert np.isnan(f(np.array([t0]), False)[0])


@given(st.floats(0, 2 * math.pi), st.floats(0, 3), st.floats(0, 2 * math.pi), st.floats(0.01, 2 * math.pi))
def test_tau_arc_integral_against_quadrature(phi, d, start, length):
    P = point_at(phi, d)
    g_like = lambda x: 1 / math.sqrt(math.cosh(d) - math.sinh(d) * math.cos(x - phi))
    ref = quad(g_like, start, start + length, limit=200, points=[phi + 2 * math.pi * k for k in range(-1, 3) if start < phi + 2 * math.pi * k < start + length])[0]
    assert abs(tau_arc_integral(P, start, length) - ref / (2 * math.pi)) < 1e-9


@given(elements, arcs(), arcs(), qs)
def test_adjoint_symmetry_of_coefficients(w, V, W, q):
    p = RepParams.uniform(q, 5)
    a = matrix_coefficient(w, V, W, p, MODEL)
    b = matrix_coefficient(w.inverse(), W, V, p, MODEL)
    assert abs(a - b) < 1e-10


@given(st.lists(st.integers(0, 4), max_size=3).map(SYS.element), arcs(), arcs(), qs)
def test_coefficient_against_grid(w, V, W, q):
    p = RepParams.uniform(q, 5)
    N = 1 << 16
    th = (np.arange(N) + 0.5) * 2 * math.pi / N
    vals = apply_wq_closed(w, PointFunction.indicator(V), p, MODEL)(th, False) * W.contains(th)
    assume(not np.isnan(vals).any())
    # piecewise smooth integrand; the error is dominated by the jumps
    assert abs(matrix_coefficient(w, V, W, p, MODEL) - float(np.mean(vals.real))) < 20 / N * (1 + q) ** w.length


def test_mass_at_q_one_is_one():
    p = RepParams.uniform(1.0, 5)
    for w in [SYS.identity, SYS.parse("s0"), SYS.parse("s0s2s4")]:
        # <w^1 1, 1> integrates tau, not tau^2, so only the identity has mass 1
        m = constant_mass(w, p, MODEL)
        assert m <= 1 + 1e-12
    assert abs(constant_mass(SYS.identity, p, MODEL) - 1) < 1e-12


def test_grid_operator_is_hermitian():
    grid = BoundaryGrid(256)
    for s in range(5):
        A = operator_matrix(SYS.gen(s), RepParams.uniform(2.5, 5), grid, MODEL)
        assert hermitian_residual(A) < 1e-10


def test_arcset():
    U = ArcSet.between(5.5, 0.5)
    assert U.contains(np.array([6.0, 0.2, 1.0])).tolist() == [True, True, False]
    assert abs(U.measure() - (0.5 + 2 * math.pi - 5.5) / (2 * math.pi)) < 1e-15
    V = ArcSet.between(0.0, 1.0)
    assert abs(U.intersect_measure(V) - 0.5 / (2 * math.pi)) < 1e-15
    assert ArcSet.full().measure() == 1 and ArcSet.empty().measure() == 0
    # closed at the start, open at the end
    assert V.contains(np.array([0.0, 1.0])).tolist() == [True, False]
    with pytest.raises(ValueError):
        ArcSet([(0, 7)])


def test_grid_function_inner_and_norm():
    grid = BoundaryGrid(64)
    g = GridFunction.sample(PointFunction.constant(2.0), grid)
    assert abs(g.norm() - 2) < 1e-15
    assert abs(inner(g, g) - 4) < 1e-14
    with pytest.raises(ValueError):
        GridFunction(np.zeros(3), grid)


@given(elements)
def test_weyl_action_unitary_on_fine_grid(w):
    grid = BoundaryGrid(4096)
    n0 = GridFunction.sample(F, grid).norm()
    n1 = GridFunction.sample(apply_w1(w, F, MODEL, 0.7), grid).norm()
    assert abs(n1 - n0) / n0 < 10 / grid.N


def test_tau_is_rn_square_root():
    w = SYS.parse("s0s2s1")
    g = represent(w, MODEL)
    x = np.linspace(0, 6, 11)
    f1 = apply_w1(w, PointFunction.constant(1.0), MODEL)(x).real
    assert np.allclose(f1**2, rn_derivative(g, x).astype(float), rtol=1e-12)
    assert orbit_point(w, MODEL).shape == (3,)
