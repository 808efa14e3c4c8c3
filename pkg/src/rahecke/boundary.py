"""Principal-series Hecke operators on functions of the boundary circle.

Functions come in two flavours.  A :class:`PointFunction` is an exact
vectorized evaluator ``theta -> complex``; operators on point functions
return new point functions, so compositions never interpolate.  A
:class:`GridFunction` is a sample vector on a uniform grid, used for
inner products.

The Weyl action is ``(w^1 f)(x) = tau(w, x) f(w^-1 x)`` with
``tau = [d(w_* l)/dl]^(1/2 + i eps)``.  The generator action ``s^q``
multiplies ``s^1 f`` by ``q^(1/2 -+ i eps)`` on the near/far arc of ``s``
and adds ``(q - 1) f`` on the far arc.

Evaluation takes a ``strict`` flag.  Strict evaluation raises
:class:`DegenerateError` at wall endpoints; non-strict evaluation returns
``nan`` there so grid code can skip and report those samples.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import elliprf

from .coxeter import CoxeterError, GroupElement
from .hecke import WallData, terms_for_mask, wall_data
from .hyperbolic import (
    FLOAT,
    TWO_PI,
    Isometry,
    PolygonModel,
    classify,
    represent,
    rn_derivative,
    angular_offset,
    wall_arc,
    wall_geometry,
)
from .walls import DegenerateError, wall

CPLX = np.clongdouble


@dataclass(frozen=True)
class RepParams:
    """Per-generator ``q_s >= 1`` and the twist ``eps``."""

    q: tuple[float, ...]
    eps: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        if any(x < 1 for x in self.q):
            raise ValueError("representation parameters need q_s >= 1")

    @classmethod
    def uniform(cls, q: float, rank: int, eps: float = 0.0) -> "RepParams":
        return cls((q,) * rank, eps)


# -- functions -----------------------------------------------------------------


class PointFunction:
    """Exact evaluator on boundary angles, vectorized over numpy arrays."""

    __slots__ = ("fn", "label")

    def __init__(self, fn: Callable, label: str = ""):
        self.fn = fn
        self.label = label

    @classmethod
    def from_callable(cls, g: Callable, label: str = "") -> "PointFunction":
        """Wrap a plain ``theta -> value`` function."""
        return cls(lambda theta, strict: np.asarray(g(theta)) + 0 * theta, label)

    @classmethod
    def constant(cls, c: complex = 1.0) -> "PointFunction":
        return cls(lambda theta, strict: np.full(np.shape(theta), c, dtype=CPLX), f"const({c})")

    @classmethod
    def indicator(cls, arcs: "ArcSet") -> "PointFunction":
        return cls(lambda theta, strict: arcs.contains(theta).astype(CPLX), f"chi({arcs})")

    def __call__(self, theta, strict: bool = True) -> np.ndarray:
        theta = np.asarray(theta, dtype=FLOAT)
        return self.fn(theta, strict)

    def __add__(self, other: "PointFunction") -> "PointFunction":
        return PointFunction(lambda t, strict: self.fn(t, strict) + other.fn(t, strict))

    def __sub__(self, other: "PointFunction") -> "PointFunction":
        return PointFunction(lambda t, strict: self.fn(t, strict) - other.fn(t, strict))

    def scale(self, c: complex) -> "PointFunction":
        return PointFunction(lambda t, strict: c * self.fn(t, strict))


class ArcSet:
    """Finite union of counterclockwise arcs ``(start, length)``.

    Arcs are closed at the start and open at the end.  Overlaps are not
    merged; callers pass disjoint arcs.
    """

    def __init__(self, arcs: Iterable[tuple[float, float]]):
        out = []
        for a, L in arcs:
            if not 0 <= L <= TWO_PI + 1e-12:
                raise ValueError(f"arc length {L} outside [0, 2 pi]")
            if L >= TWO_PI - 1e-12:
                # float 2 pi falls short of the extended-precision constant
                self.arcs = ((0.0, TWO_PI),)
                return
            if L > 0:
                out.append((float(a % TWO_PI), float(L)))
        self.arcs = tuple(out)

    @classmethod
    def full(cls) -> "ArcSet":
        return cls([(0.0, TWO_PI)])

    @classmethod
    def empty(cls) -> "ArcSet":
        return cls([])

    @classmethod
    def between(cls, a: float, b: float) -> "ArcSet":
        """Counterclockwise arc from ``a`` to ``b``."""
        return cls([(a, (b - a) % TWO_PI)])

    def is_full(self) -> bool:
        return any(L >= TWO_PI for _, L in self.arcs)

    def contains(self, theta) -> np.ndarray:
        theta = np.asarray(theta)
        out = np.zeros(theta.shape, dtype=bool)
        for a, L in self.arcs:
            out |= np.mod(theta - a, TWO_PI) < L
        return out

    def measure(self) -> float:
        """Normalized measure ``nu``."""
        if self.is_full():
            return 1.0
        return min(1.0, float(sum(L for _, L in self.arcs) / TWO_PI))

    def endpoints(self) -> list[float]:
        if self.is_full():
            return []
        return [p for a, L in self.arcs for p in (a, (a + L) % TWO_PI)]

    def intersect_measure(self, other: "ArcSet", n: int = 1 << 16) -> float:
        """``nu(self & other)`` computed exactly from breakpoints."""
        bps = np.array(sorted(set(self.endpoints() + other.endpoints())) or [0.0])
        lengths = np.diff(np.append(bps, bps[0] + TWO_PI))
        mids = bps + lengths / 2
        keep = self.contains(mids) & other.contains(mids)
        return float(lengths[keep].sum() / TWO_PI)

    def __repr__(self):
        return "ArcSet(" + ", ".join(f"[{a:.6g}, +{L:.6g})" for a, L in self.arcs) + ")"

    def to_json(self) -> list[list[float]]:
        return [[a, L] for a, L in self.arcs]


# -- the Weyl and Hecke actions ---------------------------------------------------


def _tau_values(g: Isometry, theta, eps: float):
    r = rn_derivative(g, theta)
    if eps == 0:
        return np.sqrt(r)
    return np.exp((0.5 + 1j * eps) * np.log(r))


def _wall_class(H, theta, model, strict):
    far, degenerate = classify(H, theta, model)
    if strict and degenerate.any():
        raise DegenerateError(f"boundary point on an endpoint of wall {H.reflection}")
    return far, degenerate


def apply_w1(w: GroupElement, f: PointFunction, model: PolygonModel, eps: float = 0.0) -> PointFunction:
    """``(w^1 f)(x) = tau(w, x) f(w^-1 x)``."""
    if not w.word:
        return f
    g = represent(w, model)
    ginv = g.inverse()

    def fn(theta, strict):
        return _tau_values(g, theta, eps) * f(ginv.apply_boundary(theta), strict)

    return PointFunction(fn, f"{w}^1")


def apply_sq(s: int, f: PointFunction, params: RepParams, model: PolygonModel) -> PointFunction:
    """Generator action ``s^q`` with parameter ``q_s`` and twist ``eps``."""
    H = wall(model.system.gen(s))
    refl = model.reflections[s]
    q = params.q[s]
    eps = params.eps
    q_far = q ** (0.5 + 1j * eps) if eps else math.sqrt(q)
    q_near = q ** (0.5 - 1j * eps) if eps else math.sqrt(q)

    def fn(theta, strict):
        far, degenerate = _wall_class(H, theta, model, strict)
        y = refl.apply_boundary(theta)
        n = theta.size
        both = f(np.concatenate([theta.ravel(), y.ravel()]), strict)
        fx = both[:n].reshape(theta.shape)
        fsx = both[n:].reshape(theta.shape)
        t = _tau_values(refl, theta, eps) * fsx
        out = np.where(far, (q - 1) * fx + q_far * t, q_near * t)
        if degenerate.any():
            out = np.where(degenerate, np.nan, out)
        return out

    return PointFunction(fn, f"s{s}^q")


def apply_wq_composed(w: GroupElement, f: PointFunction, params: RepParams, model: PolygonModel, word: Sequence[int] | None = None) -> PointFunction:
    """``w^q f`` by composing generator actions along a reduced word, rightmost first."""
    letters = tuple(w.word if word is None else word)
    if len(letters) != w.length:
        raise CoxeterError("word is not a reduced word of w")
    for s in reversed(letters):
        f = apply_sq(s, f, params, model)
    return f


def term_coefficient(qm1: Sequence[int], qexp: Sequence[int], lw: Sequence[int], params: RepParams) -> complex:
    """Coefficient of ``(h w)^1 f`` in the anti-chain formula.

    Per type ``s``: ``(q_s - 1)^#h_s q_s^((l_s - #h_s)/2 + i eps (2 ht_s - l_s - #h_s))``,
    with ``ht = l - qexp``.
    """
    c: complex = 1.0
    eps = params.eps
    for qs, nh, qe, ls in zip(params.q, qm1, qexp, lw):
        if nh:
            c *= (qs - 1) ** nh
            if c == 0:
                return 0.0
        ht = ls - qe
        e = (ls - nh) / 2 + 1j * eps * (2 * ht - ls - nh) if eps else (ls - nh) / 2
        if e:
            c *= qs**e
    return c


class _ClosedForm:
    """Per-``w`` data for the anti-chain formula on the boundary."""

    def __init__(self, w: GroupElement, params: RepParams, model: PolygonModel, data: WallData | None = None):
        self.w = w
        self.model = model
        self.params = params
        self.data = data if data is not None else wall_data(w)
        self.walls = self.data.poset.walls
        self.isos = [represent(hw, model) for hw in self.data.hw]
        self.inv = [g.inverse() for g in self.isos]
        self._coef: dict[int, np.ndarray] = {}

    def patterns(self, theta, strict):
        inside = np.zeros(np.shape(theta), dtype=np.int64)
        bad = np.zeros(np.shape(theta), dtype=bool)
        for i, H in enumerate(self.walls):
            far, degenerate = _wall_class(H, theta, self.model, strict)
            inside |= far.astype(np.int64) << i
            bad |= degenerate
        return inside, bad

    def coefficients(self, mask: int) -> np.ndarray:
        """Coefficient of each anti-chain of P(1|w) for points with far-pattern ``mask``."""
        c = self._coef.get(mask)
        if c is None:
            c = np.zeros(len(self.isos), dtype=complex)
            for k, qm1, qexp in terms_for_mask(self.data, mask):
                c[k] = term_coefficient(qm1, qexp, self.data.lw, self.params)
            self._coef[mask] = c
        return c

    def coefficient_table(self, inside: np.ndarray):
        masks, inv = np.unique(inside, return_inverse=True)
        table = np.array([self.coefficients(int(m)) for m in masks]).reshape(len(masks), len(self.isos))
        return table[inv.ravel()]


def apply_wq_closed(w: GroupElement, f: PointFunction, params: RepParams, model: PolygonModel) -> PointFunction:
    """``w^q f`` from the anti-chain closed form, point by point.

    At ``x`` the sum runs over anti-chains ``h`` of P(1|x,w), the walls of
    P(1|w) whose far arc contains ``x``.
    """
    cf = _ClosedForm(w, params, model)
    eps = params.eps

    def fn(theta, strict):
        shape = np.shape(theta)
        x = np.ravel(theta)
        inside, bad = cf.patterns(x, strict)
        coef = cf.coefficient_table(inside)
        args, idx, weights = [], [], []
        for k, g in enumerate(cf.isos):
            sel = np.nonzero(coef[:, k])[0]
            if sel.size == 0:
                continue
            xs = x[sel]
            idx.append(sel)
            weights.append(coef[sel, k] * _tau_values(g, xs, eps))
            args.append(cf.inv[k].apply_boundary(xs))
        out = np.zeros(x.size, dtype=CPLX)
        if idx:
            vals = f(np.concatenate(args), strict)
            np.add.at(out, np.concatenate(idx), np.concatenate(weights) * vals)
        if bad.any():
            out[bad] = np.nan
        return out.reshape(shape)

    return PointFunction(fn, f"{w}^q")


# -- grids ----------------------------------------------------------------------


class BoundaryGrid:
    """Uniform grid ``theta_j = 2 pi j / N`` with weights ``1/N``."""

    def __init__(self, N: int):
        if N <= 0:
            raise ValueError("grid size must be positive")
        self.N = N
        self.angles = TWO_PI * np.arange(N) / N
        self.weights = np.full(N, 1.0 / N)

    def cell(self, theta) -> np.ndarray:
        """Index of the cell ``[theta_j - pi/N, theta_j + pi/N)`` containing ``theta``."""
        return np.floor(np.mod(np.asarray(theta) + math.pi / self.N, TWO_PI) * self.N / TWO_PI).astype(np.int64) % self.N

    def edges(self) -> np.ndarray:
        return np.mod(self.angles - math.pi / self.N, TWO_PI)


class GridFunction:
    """Samples on a grid; ``skipped`` lists degenerate samples (stored as nan)."""

    def __init__(self, values, grid: BoundaryGrid):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} samples, got shape {values.shape}")
        self.values = values
        self.grid = grid

    @property
    def skipped(self) -> np.ndarray:
        return np.nonzero(np.isnan(self.values))[0]

    @classmethod
    def sample(cls, f: PointFunction, grid: BoundaryGrid) -> "GridFunction":
        return cls(f(grid.angles, strict=False), grid)

    def norm(self) -> float:
        return math.sqrt(max(0.0, inner(self, self).real))


def inner(f: GridFunction, g: GridFunction) -> complex:
    """Quadrature ``<f, g> = sum_j w_j f_j conj(g_j)``; skipped samples contribute nothing."""
    if f.grid.N != g.grid.N:
        raise ValueError("grid size mismatch")
    prod = f.values * np.conj(g.values)
    ok = ~np.isnan(prod)
    return complex(np.sum(f.grid.weights[ok] * prod[ok]))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def operator_matrix(w: GroupElement, params: RepParams, grid: BoundaryGrid, model: PolygonModel) -> sparse.csr_matrix:
    """Galerkin matrix ``A_jk = N <w^q chi_k, chi_j>`` on grid-cell indicators.

    Entries are integrals over the pieces where the integrand is smooth:
    the circle is cut at cell edges, their images under every ``h w`` and
    the endpoints of the walls of P(1|w).  Each piece is integrated with
    8-point Gauss-Legendre.  On coefficient vectors with the inner product
    ``sum_j c_j conj(d_j) / N`` the matrix represents the compression of
    ``w^q`` to piecewise-constant functions, so it is Hermitian exactly when
    the operator is self-adjoint, up to integration error.
    """
    N = grid.N
    cf = _ClosedForm(w, params, model)
    edges = grid.edges()
    bps = [edges] + [g.apply_boundary(edges) for g in cf.isos]
    bps += [np.array(wall_arc(H, model)) for H in cf.walls]
    a = np.unique(np.mod(np.concatenate(bps), TWO_PI))
    L = np.diff(np.append(a, a[0] + TWO_PI))
    keep = L > 1e-15
    a, L = a[keep], L[keep]
    mids = a + L / 2
    rows = grid.cell(mids)
    inside, bad = cf.patterns(mids, strict=True)
    coef = cf.coefficient_table(inside)
    nodes = a[:, None] + L[:, None] * (_GL_NODES[None, :] + 1) / 2
    wts = L[:, None] * _GL_WEIGHTS[None, :] / 2
    R, C, V = [], [], []
    for k, g in enumerate(cf.isos):
        sel = np.nonzero(coef[:, k])[0]
        if sel.size == 0:
            continue
        integral = np.sum(wts[sel] * _tau_values(g, nodes[sel], params.eps), axis=1) / TWO_PI
        R.append(rows[sel])
        C.append(grid.cell(cf.inv[k].apply_boundary(mids[sel])))
        V.append(N * coef[sel, k] * integral)
    if not R:
        return sparse.csr_matrix((N, N), dtype=complex)
    return sparse.coo_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))), shape=(N, N)).tocsr()


def hermitian_residual(A: sparse.spmatrix) -> float:
    D = (A - A.conj().T).tocoo()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


# -- exact matrix coefficients at eps = 0 ----------------------------------------


def _half_integral(u, p, r):
    """``int_0^u dt / sqrt(p cos^2(t/2) + r sin^2(t/2))`` for ``|u| <= pi``."""
    ph = np.asarray(u) / 2
    c2 = np.cos(ph) ** 2
    s2 = np.sin(ph) ** 2
    return 2 * np.sin(ph) * elliprf(p * c2, p * c2 + r * s2, p)


def tau_arc_integral(points, start, length):
    """``int tau(g, x) dl(x)`` over the arc ``[start, start + length)`` at ``eps = 0``.

    ``points`` holds ``g . o`` (last axis of size 3).  With ``g . o`` at
    distance ``d`` in direction ``phi``, ``tau^2 = 1/(cosh d - sinh d cos(x - phi))``
    and the denominator equals ``e^-d cos^2 + e^d sin^2`` of ``(x - phi)/2``,
    which reduces the integral to Carlson's ``R_F``.  Broadcasts.
    """
    P = np.asarray(points, dtype=float)
    two_pi = 2 * math.pi
    ed = P[..., 2] + np.hypot(P[..., 0], P[..., 1])
    p, r = 1.0 / ed, ed
    phi = np.arctan2(P[..., 1], P[..., 0])
    ua = np.mod(np.asarray(start, dtype=float) - phi + math.pi, two_pi) - math.pi
    ub = ua + np.asarray(length, dtype=float)
    wrap = ub > math.pi
    Ib = _half_integral(np.where(wrap, ub - two_pi, ub), p, r)
    Ia = _half_integral(ua, p, r)
    full = _half_integral(np.full(np.shape(ua), math.pi), p, r)
    return (Ib - Ia + np.where(wrap, 2 * full, 0.0)) / two_pi


def matrix_coefficient(
    w: GroupElement,
    V: ArcSet,
    W: ArcSet,
    params: RepParams | Sequence[RepParams],
    model: PolygonModel,
    data: WallData | None = None,
):
    """``<w^q chi_V, chi_W>`` at ``eps = 0``, exact up to special-function rounding.

    The circle is cut at the endpoints of ``W``, of the walls of P(1|w) and
    of ``h w V`` for every anti-chain ``h``; on each piece the integrand is
    a fixed combination of ``tau(h w, .)`` integrated in closed form.
    Accepts a list of parameter sets and then returns one value per set.
    """
    many = not isinstance(params, RepParams)
    plist = list(params) if many else [params]
    if data is None:
        data = wall_data(w, cache=False)
    walls = data.poset.walls
    geoms = [wall_geometry(H, model) for H in walls]
    centers = np.array([g.center for g in geoms], dtype=FLOAT)
    halves = np.array([g.half_width for g in geoms], dtype=FLOAT)
    isos = [represent(hw, model) for hw in data.hw]
    totals = coefficient_core(centers, halves, isos, data, V, W, plist)
    return list(totals) if many else float(totals[0])


def coefficient_core(centers, halves, isos: Sequence[Isometry], data, V: ArcSet, W: ArcSet, plist: Sequence[RepParams]) -> np.ndarray:
    """Exact ``<w^q chi_V, chi_W>`` from raw geometry.

    ``centers``/``halves`` describe the far arcs of the walls of P(1|w) in
    the bit order of ``data`` (anything :func:`terms_for_mask` accepts) and
    ``isos[k]`` is the isometry of ``h_k w``.
    """
    if any(p.eps != 0 for p in plist):
        raise ValueError("exact matrix coefficients are implemented for eps = 0")
    bps = [np.asarray(W.endpoints(), dtype=float), np.asarray(centers - halves, dtype=float), np.asarray(centers + halves, dtype=float)]
    vend = np.array(V.endpoints())
    if vend.size:
        bps += [np.asarray(g.apply_boundary(vend), dtype=float) for g in isos]
    allb = np.concatenate(bps)
    a = np.unique(np.mod(allb, 2 * math.pi)) if allb.size else np.array([0.0])
    L = np.diff(np.append(a, a[0] + 2 * math.pi))
    keep = L > 1e-15
    a, L = a[keep], L[keep]
    mids = a + L / 2
    inW = W.contains(mids)
    a, L, mids = a[inW], L[inW], mids[inW]
    inside = np.zeros(mids.shape, dtype=np.int64)
    for i, (c, hw) in enumerate(zip(centers, halves)):
        far = np.abs(angular_offset(mids, c)) < hw
        inside |= far.astype(np.int64) << i
    masks, inv = np.unique(inside, return_inverse=True)
    inv = inv.ravel()
    coef = np.zeros((len(plist), len(masks), len(isos)))
    for j, m in enumerate(masks):
        for k, qm1, qexp in terms_for_mask(data, int(m)):
            for i, p in enumerate(plist):
                coef[i, j, k] = term_coefficient(qm1, qexp, data.lw, p).real
    totals = np.zeros(len(plist))
    for k, g in enumerate(isos):
        live = np.any(coef[:, :, k] != 0, axis=0)[inv]
        if not live.any():
            continue
        idx = np.nonzero(live)[0]
        idx = idx[V.contains(g.inverse().apply_boundary(mids[idx]))]
        if idx.size == 0:
            continue
        vals = tau_arc_integral(g.matrix[:, 2], a[idx], L[idx])
        totals += coef[:, inv[idx], k] @ vals
    return totals


def constant_mass(w: GroupElement, params: RepParams, model: PolygonModel) -> float:
    """``<w^q 1, 1>``."""
    return matrix_coefficient(w, ArcSet.full(), ArcSet.full(), params, model)
