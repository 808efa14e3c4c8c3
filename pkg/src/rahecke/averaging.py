"""Averaging operators over spherical layers of the parity lattice.

Gamma is the kernel of ``W -> (Z/2)^S`` recording the parity of each
generator.  A finite-order element of a right-angled Coxeter group is
conjugate into a spherical parabolic subgroup, and those have nonzero
parity image, so Gamma is torsion-free of index ``2^k``.

Layers ``S_t = {gamma : |o - gamma o| in (t - R, t + R)}`` are enumerated
by walking shortlex words breadth first.  A word ``v`` is pruned once one
of its right-descent walls is at distance ``>= D`` from ``o``: every
geodesic extension of ``v`` lies beyond that wall, so nothing within
distance ``D`` is lost.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .boundary import (
    ArcSet,
    GridFunction,
    PointFunction,
    RepParams,
    apply_wq_closed,
    coefficient_core,
    constant_mass,
)
from .coxeter import CoxeterSystem, GroupElement, ball
from .hecke import HeapData
from .hyperbolic import FLOAT, Isometry, PolygonModel, dist, represent

log = logging.getLogger(__name__)

TIE = 1e-9


# -- the lattice ------------------------------------------------------------------


def parity(word: Sequence[int]) -> int:
    """Bitmask of generators occurring an odd number of times."""
    m = 0
    for a in word:
        m ^= 1 << a
    return m


def lattice_membership(w: GroupElement) -> bool:
    return parity(w.word) == 0


@dataclass
class Lattice:
    """The parity kernel of a right-angled Coxeter system."""

    system: CoxeterSystem

    @property
    def index(self) -> int:
        return 2**self.system.rank

    def __contains__(self, w: GroupElement) -> bool:
        return lattice_membership(w)

    def coset(self, w: GroupElement) -> int:
        return parity(w.word)


# -- the layer half-width ---------------------------------------------------------


def _klein(p):
    p = np.asarray(p, dtype=float)
    return p[..., :2] / p[..., 2:3]


def _from_klein(k):
    k = np.asarray(k, dtype=float)
    s = 1.0 / np.sqrt(1.0 - np.sum(k * k, axis=-1, keepdims=True))
    return np.concatenate([k * s, s], axis=-1)


def polygon_mesh(model: PolygonModel, m: int) -> tuple[np.ndarray, float]:
    """Sample points of the closed polygon and a covering radius.

    The polygon is fanned into triangles from ``o`` and each is cut into
    ``m^2`` geodesic triangles (straight in the Klein model).  Every point of
    a small triangle is within its longest edge of one of its corners, so
    the longest small edge bounds the distance to the nearest sample.
    """
    if m < 1:
        raise ValueError("mesh resolution must be positive")
    O = np.zeros(2)
    V = _klein(np.array(model.vertices, dtype=float))
    pts = []
    rho = 0.0
    k = len(V)
    for i in range(k):
        A, B = V[i], V[(i + 1) % k]
        grid = {}
        for a in range(m + 1):
            for b in range(m + 1 - a):
                grid[a, b] = O + (A - O) * a / m + (B - O) * b / m
        pts.extend(grid.values())
        for a in range(m):
            for b in range(m - a):
                tris = [(grid[a, b], grid[a + 1, b], grid[a, b + 1])]
                if a + b + 2 <= m:
                    tris.append((grid[a + 1, b], grid[a, b + 1], grid[a + 1, b + 1]))
                for P, Q, R in tris:
                    h = _from_klein(np.array([P, Q, R]))
                    rho = max(rho, float(np.max(dist(h[[0, 1, 2]], h[[1, 2, 0]]))))
    X = _from_klein(np.unique(np.round(np.array(pts), 15), axis=0))
    return X, rho


def quotient_diameter_bound(model: PolygonModel, mesh: int = 12, radius: int = 6) -> dict:
    """Certified upper bound for ``diam(Gamma \\ H)``.

    Points of the quotient are represented by ``g x`` with ``x`` in the
    polygon and ``g`` a coset representative.  As Gamma is normal,
    ``min_gamma d(g x, gamma g' y) = min_{u in g^-1 g' Gamma} d(x, u y)``.
    Restricting ``u`` to a finite ball only raises each minimum, and moving
    ``x, y`` to the nearest mesh samples costs at most ``2 rho``.
    """
    sys = model.system
    X, rho = polygon_mesh(model, mesh)
    elems = ball(sys, radius)
    cls = np.array([parity(u.word) for u in elems])
    if len(set(cls.tolist())) != 2**sys.rank:
        raise ValueError(f"radius {radius} does not meet every coset")
    mats = np.array([np.asarray(represent(u, model).matrix, dtype=float) for u in elems])
    UY = np.einsum("uij,yj->uyi", mats, X)  # (U, Y, 3)
    order = np.argsort(cls, kind="stable")
    bounds = np.searchsorted(cls[order], np.arange(2**sys.rank + 1))
    UY = UY[order]
    JX = X * np.array([1.0, 1.0, -1.0])
    best = 0.0
    for x in JX:
        c = -(UY @ x)  # cosh of distances, shape (U, Y)
        mins = np.minimum.reduceat(c, bounds[:-1], axis=0)  # per class
        best = max(best, float(mins.max()))
    core = float(np.arccosh(max(best, 1.0)))
    return {"R": core + 2 * rho, "sampled": core, "rho": rho, "mesh": mesh, "radius": radius, "samples": len(X)}


def coset_representatives(sys: CoxeterSystem, radius: int = 6) -> list[GroupElement]:
    """Shortest (then shortlex least) element of each parity class."""
    reps: dict[int, GroupElement] = {}
    for u in ball(sys, radius):
        reps.setdefault(parity(u.word), u)
    if len(reps) != 2**sys.rank:
        raise ValueError(f"radius {radius} does not meet every coset")
    return [reps[k] for k in sorted(reps)]


def union_diameter(model: PolygonModel) -> float:
    """Diameter of the union of the coset-representative chambers, from vertex sets."""
    V = np.array(model.vertices, dtype=float)
    pts = np.concatenate([np.asarray(represent(g, model).apply(V), dtype=float) for g in coset_representatives(model.system)])
    c = -np.einsum("ai,bi->ab", pts * np.array([1.0, 1.0, -1.0]), pts)
    return float(np.arccosh(max(1.0, c.max())))


def diameter_R(model: PolygonModel, method: str = "quotient", mesh: int = 12, radius: int = 6) -> float:
    if method == "quotient":
        return quotient_diameter_bound(model, mesh, radius)["R"]
    if method == "union":
        return union_diameter(model)
    raise ValueError(f"unknown method {method!r}")


# -- enumeration ------------------------------------------------------------------


@dataclass
class LatticeBall:
    """Elements of Gamma with ``|o - gamma o| < D``."""

    D: float
    words: list[tuple[int, ...]]
    dist: np.ndarray
    z: np.ndarray
    visited: int = 0

    def __len__(self):
        return len(self.words)


def enumerate_ball(model: PolygonModel, D: float, lattice_only: bool = True) -> LatticeBall:
    """Shortlex words with ``|o - w o| < D``, pruned by descent walls."""
    sys = model.system
    k = sys.rank
    G = np.array([np.asarray(g.matrix, dtype=float) for g in model.reflections])
    Nrm = np.array([np.asarray(n, dtype=float) for n in model.normals])
    cmask = np.array(sys._cmask, dtype=np.int64)
    shD = math.sinh(D)

    M = np.eye(3)[None]
    F = np.zeros(1, dtype=np.int64)
    Dm = np.zeros(1, dtype=np.int64)
    par = np.zeros(1, dtype=np.int64)
    parents: list[np.ndarray] = []
    letters: list[np.ndarray] = []
    found: list[tuple[int, np.ndarray]] = []
    dists, zs = [], []
    visited = 0
    depth = 0
    while M.shape[0]:
        visited += M.shape[0]
        c22 = M[:, 2, 2]
        d = np.arccosh(np.maximum(c22, 1.0))
        keep = d < D
        if lattice_only:
            keep &= par == 0
        idx = np.nonzero(keep)[0]
        if idx.size:
            found.append((depth, idx))
            dists.append(d[idx])
            zs.append(np.mod(np.arctan2(M[idx, 1, 2], M[idx, 0, 2]), 2 * math.pi))
        # |<o, v n_c>| = sinh(distance from o to the descent wall)
        far = np.abs(np.einsum("nj,cj->nc", M[:, 2, :], Nrm))
        desc = ((Dm[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)
        live = ~np.any(desc & (far >= shD), axis=1)
        nM, nF, nD, nP, npar, nlet = [], [], [], [], [], []
        for c in range(k):
            sel = np.nonzero(live & (((F >> c) & 1) == 0))[0]
            if sel.size == 0:
                continue
            nM.append(M[sel] @ G[c])
            nF.append((1 << c) | ((F[sel] | ((1 << c) - 1)) & cmask[c]))
            nD.append((1 << c) | (Dm[sel] & cmask[c]))
            nP.append(par[sel] ^ (1 << c))
            npar.append(sel.astype(np.int64))
            nlet.append(np.full(sel.size, c, dtype=np.int8))
        if not nM:
            break
        M = np.concatenate(nM)
        F, Dm, par = np.concatenate(nF), np.concatenate(nD), np.concatenate(nP)
        parents.append(np.concatenate(npar))
        letters.append(np.concatenate(nlet))
        depth += 1
    words = []
    for depth, idx in found:
        for i in idx:
            w = []
            j, lev = int(i), depth
            while lev > 0:
                w.append(int(letters[lev - 1][j]))
                j = int(parents[lev - 1][j])
                lev -= 1
            words.append(tuple(reversed(w)))
    dd = np.concatenate(dists) if dists else np.zeros(0)
    zz = np.concatenate(zs) if zs else np.zeros(0)
    return LatticeBall(D, words, dd, zz, visited)


@dataclass
class SphericalLayer:
    t: float
    R: float
    members: np.ndarray  # indices into the ball

    def __len__(self):
        return int(self.members.size)


def spherical_layer(t: float, R: float, lb: LatticeBall) -> SphericalLayer:
    if t + R > lb.D + 1e-12:
        raise ValueError(f"ball radius {lb.D} too small for layer t={t}, R={R}")
    sel = np.nonzero((lb.dist > t - R) & (lb.dist < t + R))[0]
    return SphericalLayer(t, R, sel)


def in_closed(U: ArcSet, z: np.ndarray, tol: float = TIE) -> tuple[np.ndarray, int]:
    """Closed-arc membership with a tie count for points within ``tol`` of an endpoint."""
    z = np.asarray(z, dtype=float)
    inside = U.contains(z)
    ties = np.zeros(z.shape, dtype=bool)
    for e in U.endpoints():
        ties |= np.abs(np.mod(z - e + math.pi, 2 * math.pi) - math.pi) <= tol
    return inside | ties, int(np.count_nonzero(ties))


# -- per-element coefficients -----------------------------------------------------


class WordGeometry:
    """Walls of P(1|w) and the isometries of ``h w`` computed along a reduced word."""

    def __init__(self, word: Sequence[int], model: PolygonModel):
        self.word = tuple(word)
        self.data = HeapData(self.word, model.system)
        refl = [g.matrix for g in model.reflections]
        n = len(self.word)
        # prefix[i] = a_0 ... a_{i-1}, suffix[j] = a_j ... a_{n-1}
        prefix = [np.eye(3, dtype=FLOAT)]
        normals = []
        for a in self.word:
            v = prefix[-1] @ model.normals[a]
            normals.append(v if v[2] > 0 else -v)
            prefix.append(prefix[-1] @ refl[a])
        suffix = [np.eye(3, dtype=FLOAT)] * (n + 1)
        for j in range(n - 1, -1, -1):
            suffix[j] = refl[self.word[j]] @ suffix[j + 1]
        self.normals = normals
        self.matrix = prefix[-1]
        self.centers = np.array([np.arctan2(v[1], v[0]) for v in normals], dtype=FLOAT)
        self.halves = np.array([np.arctan2(FLOAT(1), v[2]) for v in normals], dtype=FLOAT)
        # h w is the word with the letters of h deleted; products of the
        # remaining letters avoid the large entries of far reflections
        isos = []
        for idx in self.data.chain_idx:
            if not idx:
                isos.append(Isometry(prefix[-1]))
                continue
            A = prefix[idx[0]]
            for lo, hi in zip(idx, idx[1:]):
                for j in range(lo + 1, hi):
                    A = A @ refl[self.word[j]]
            isos.append(Isometry(A @ suffix[idx[-1] + 1]))
        self.isos = isos

    def coefficient(self, V: ArcSet, W: ArcSet, plist: Sequence[RepParams]) -> np.ndarray:
        return coefficient_core(self.centers, self.halves, self.isos, self.data, V, W, plist)


# -- operators and the experiment -------------------------------------------------


def averaging_apply(
    t: float,
    U: ArcSet,
    f: GridFunction,
    params: RepParams,
    model: PolygonModel,
    R: float,
    lb: LatticeBall | None = None,
) -> GridFunction:
    """``(1/|S_t|) sum_gamma chi_U(z(gamma)) gamma^q f / <gamma^q 1, 1>`` on the grid of ``f``."""
    if params.eps != 0:
        raise ValueError("averaging operators are defined for eps = 0")
    lb = lb or enumerate_ball(model, t + R)
    layer = spherical_layer(t, R, lb)
    if len(layer) == 0:
        raise ValueError(f"empty layer at t={t}")
    grid = f.grid
    vals = np.nan_to_num(f.values)
    fpt = PointFunction(lambda th, strict: vals[grid.cell(th)], "grid")
    sel, ties = in_closed(U, lb.z[layer.members])
    if ties:
        log.info("%d layer elements tie with the arc boundary", ties)
    out = np.zeros(grid.N, dtype=complex)
    sys = model.system
    for i in layer.members[sel]:
        g = sys.elem(lb.words[i])
        mass = constant_mass(g, params, model)
        out += np.asarray(apply_wq_closed(g, fpt, params, model)(grid.angles, False), dtype=complex) / mass
    return GridFunction(out / len(layer), grid)


@dataclass
class ExperimentResult:
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def convergence_experiment(
    U: ArcSet,
    V: ArcSet,
    Ws: dict[str, ArcSet],
    t_list: Sequence[float],
    plist: Sequence[RepParams],
    model: PolygonModel,
    R: float,
) -> ExperimentResult:
    """``<T_t chi_V, chi_W>`` against ``nu(U & W) nu(V)`` for every ``t``, ``q`` and ``W``.

    Each lattice element with ``z(gamma)`` in ``U`` is processed once; its
    mass and matrix coefficients are shared by every layer containing it.
    """
    if any(p.eps != 0 for p in plist):
        raise ValueError("averaging operators are defined for eps = 0")
    tmax = max(t_list)
    lb = enumerate_ball(model, tmax + R)
    inU, ties = in_closed(U, lb.z)
    use = np.nonzero(inU)[0]
    names = sorted(Ws)
    full = ArcSet.full()
    # per element: mass and one coefficient per W, for each parameter set
    mass = np.zeros((len(plist), lb.dist.size))
    coef = np.zeros((len(names), len(plist), lb.dist.size))
    for i in use:
        geo = WordGeometry(lb.words[i], model)
        mass[:, i] = geo.coefficient(full, full, plist)
        for j, n in enumerate(names):
            coef[j, :, i] = geo.coefficient(V, Ws[n], plist)
    nuV = float(V.measure())
    res = ExperimentResult()
    for t in t_list:
        layer = spherical_layer(t, R, lb)
        if len(layer) == 0:
            raise ValueError(f"empty layer at t={t}")
        m = layer.members[inU[layer.members]]
        for pi, p in enumerate(plist):
            for j, n in enumerate(names):
                value = float(np.sum(coef[j, pi, m] / mass[pi, m]) / len(layer))
                target = float(U.intersect_measure(Ws[n]) * nuV)
                res.rows.append(
                    {
                        "t": float(t),
                        "q": p.q[0] if len(set(p.q)) == 1 else list(p.q),
                        "W": n,
                        "layer": len(layer),
                        "in_U": int(m.size),
                        "value": value,
                        "target": target,
                        "error": abs(value - target),
                    }
                )
    res.summary = {
        "R": R,
        "ball_radius": tmax + R,
        "lattice_elements": len(lb),
        "visited": lb.visited,
        "in_U": int(use.size),
        "ties": ties,
        "min_mass": [float(np.min(mass[i, use], initial=np.inf)) for i in range(len(plist))],
    }
    return res
