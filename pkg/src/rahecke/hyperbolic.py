"""The hyperbolic plane and the right-angled k-gon tessellation.

Points live on the hyperboloid ``{p : <p, p> = -1, p_2 > 0}`` with the
Lorentz form ``<a, b> = a0 b0 + a1 b1 - a2 b2``.  The basepoint is
``o = (0, 0, 1)``, the center of the disc model.  Boundary points are
angles ``theta``; the null vector ``xi(theta) = (cos, sin, 1)`` represents
them on the light cone.

Useful closed forms used throughout:

* ``cosh d(p, q) = -<p, q>``
* ``beta_b(x, y) = ln(<y, xi> / <x, xi>)``; for ``y`` on the ray from ``x``
  toward ``b`` at distance ``t`` this is ``-t``
* ``d(g_* l)/dl (b) = exp(-beta_b(o, g o)) = -1 / <g o, xi>`` with ``l`` the
  normalized angle measure (Poisson kernel).

Arithmetic is carried out in ``numpy.longdouble``.  Boundary maps of long
words expand some arcs by ``e^d``; the extra bits keep pointwise identities
between differently computed compositions well below ``1e-9``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coxeter import CoxeterError, CoxeterSystem, GroupElement, multiply
from .walls import DegenerateError, Side, Wall, gallery_busemann

FLOAT = np.longdouble
PI = np.arccos(FLOAT(-1))
TWO_PI = 2 * PI
J = np.diag(np.array([1, 1, -1], dtype=FLOAT))
ORIGIN = np.array([0, 0, 1], dtype=FLOAT)


def lorentz(a, b):
    """Lorentz form, broadcasting over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def boundary_vector(theta):
    theta = np.asarray(theta, dtype=FLOAT)
    return np.stack([np.cos(theta), np.sin(theta), np.ones_like(theta)], axis=-1)


def canonical_angle(theta):
    return np.mod(np.asarray(theta, dtype=FLOAT), TWO_PI)


def to_disc(p) -> np.ndarray:
    p = np.asarray(p, dtype=FLOAT)
    return p[..., :2] / (1 + p[..., 2:3])


def from_disc(z) -> np.ndarray:
    z = np.asarray(z, dtype=FLOAT)
    r2 = np.sum(z * z, axis=-1, keepdims=True)
    if np.any(r2 >= 1):
        raise ValueError("point outside the open unit disc")
    return np.concatenate([2 * z, 1 + r2], axis=-1) / (1 - r2)


def point_at(direction, distance) -> np.ndarray:
    """Point at hyperbolic distance ``distance`` from ``o`` in angular direction ``direction``."""
    t, d = FLOAT(direction), FLOAT(distance)
    return np.array([np.sinh(d) * np.cos(t), np.sinh(d) * np.sin(t), np.cosh(d)], dtype=FLOAT)


class Isometry:
    """A matrix preserving the Lorentz form and the upper sheet."""

    __slots__ = ("matrix", "_cartan")

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=FLOAT)
        self._cartan = None

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(3, dtype=FLOAT))

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        # A^-1 = J A^T J for Lorentz matrices
        return Isometry(J @ self.matrix.T @ J)

    def form_residual(self) -> float:
        return float(np.max(np.abs(self.matrix.T @ J @ self.matrix - J)))

    def determinant(self) -> float:
        m = self.matrix
        return float(
            m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
        )

    def apply(self, p) -> np.ndarray:
        return np.asarray(p, dtype=FLOAT) @ self.matrix.T

    def cartan(self):
        """``(phi, d, psi, preserving)`` with ``self = R_phi A_d K``.

        ``phi`` is the direction of ``g . o``, ``psi`` that of ``g^-1 . o``,
        ``d = |g . o|`` and ``K`` fixes ``o`` (a rotation when ``preserving``).
        """
        if self._cartan is None:
            m = self.matrix
            d = np.log(m[2, 2] + np.hypot(m[0, 2], m[1, 2]))
            phi = np.arctan2(m[1, 2], m[0, 2])
            preserving = self.determinant() > 0
            if d < 0.5:
                # phi and psi are noise near the identity; read the rotation off K instead
                c, s = np.cos(phi), np.sin(phi)
                ch, sh = np.cosh(d), np.sinh(d)
                r0 = c * m[0] + s * m[1]
                r1 = -s * m[0] + c * m[1]
                k0 = ch * r0 - sh * m[2]
                a = np.arctan2(r1[0], k0[0])
                psi = PI - a if preserving else a - PI
            else:
                psi = np.arctan2(-m[2, 1], -m[2, 0])
            self._cartan = (phi, d, psi, preserving)
        return self._cartan

    def apply_boundary(self, theta):
        """Action on boundary angles, stable even where the map contracts strongly."""
        phi, d, psi, preserving = self.cartan()
        theta = np.asarray(theta, dtype=FLOAT)
        u = theta + PI - psi if preserving else psi + PI - theta
        # boost: tan(u'/2) = e^-d tan(u/2)
        h = u / 2
        u2 = 2 * np.arctan2(np.exp(-d / 2) * np.sin(h), np.exp(d / 2) * np.cos(h))
        return canonical_angle(phi + u2)

    def apply_disc(self, z) -> np.ndarray:
        return to_disc(self.apply(from_disc(z)))

    def close_to(self, other: "Isometry", tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= tol)


def reflection_matrix(n) -> np.ndarray:
    """Reflection in the geodesic ``{p : <p, n> = 0}`` for a unit spacelike ``n``."""
    n = np.asarray(n, dtype=FLOAT)
    return np.eye(3, dtype=FLOAT) - 2 * np.outer(n, n) @ J


def side_normal(direction, a) -> np.ndarray:
    """Unit normal of the geodesic at distance ``a`` from ``o``, facing away from ``o``."""
    t, a = FLOAT(direction), FLOAT(a)
    return np.array([np.cosh(a) * np.cos(t), np.cosh(a) * np.sin(t), np.sinh(a)], dtype=FLOAT)


def _vertex(n1, n2) -> np.ndarray:
    v = J @ np.cross(n1, n2)
    v = v / np.sqrt(-lorentz(v, v))
    return v if v[2] > 0 else -v


def vertex_angle(p, a, b):
    """Angle at ``p`` between the geodesics toward ``a`` and ``b``."""
    ua = a + lorentz(a, p) * p
    ub = b + lorentz(b, p) * p
    c = lorentz(ua, ub) / np.sqrt(lorentz(ua, ua) * lorentz(ub, ub))
    return np.arccos(np.clip(c, -1, 1))


def _regular_polygon(k: int, a):
    phis = [TWO_PI * i / k for i in range(k)]
    normals = [side_normal(phi, a) for phi in phis]
    # vertex i sits between sides i and i+1
    verts = [_vertex(normals[i], normals[(i + 1) % k]) for i in range(k)]
    return normals, verts


def _angle_at(k: int, a):
    _, verts = _regular_polygon(k, a)
    return vertex_angle(verts[0], verts[-1], verts[1])


@dataclass
class PolygonModel:
    """Regular right-angled k-gon centered at ``o`` with its side reflections.

    Side ``i`` has outward direction ``2 pi i / k``; generator ``s_i`` of
    :meth:`CoxeterSystem.polygon_group` is the reflection in side ``i``.
    """

    k: int
    inradius: float
    normals: list[np.ndarray]
    vertices: list[np.ndarray]
    reflections: list[Isometry]
    system: CoxeterSystem
    _rep: dict = field(default_factory=dict, repr=False)
    _wall_cache: dict = field(default_factory=dict, repr=False)

    @property
    def basepoint(self) -> np.ndarray:
        return ORIGIN

    @property
    def disc_vertices(self) -> np.ndarray:
        return to_disc(np.array(self.vertices))

    def angles(self) -> list[float]:
        k = self.k
        return [
            float(vertex_angle(self.vertices[i], self.vertices[i - 1], self.vertices[(i + 1) % k])) for i in range(k)
        ]

    def diameter(self) -> float:
        return max(float(dist(a, b)) for a in self.vertices for b in self.vertices)


def build_polygon(k: int = 5, system: CoxeterSystem | None = None) -> PolygonModel:
    """Solve for the regular right-angled k-gon by bisection on its inradius.

    Bisection runs until the bracket cannot shrink in extended precision.
    """
    if k < 5:
        raise CoxeterError(f"no compact right-angled hyperbolic {k}-gon; need k >= 5")
    if system is None:
        system = CoxeterSystem.polygon_group(k)
    elif system.rank != k:
        raise CoxeterError("system rank does not match the number of sides")
    right = PI / 2
    # the vertex angle decreases from (k-2)pi/k (Euclidean limit) to 0
    lo, hi = FLOAT(1e-6), FLOAT(1)
    while _angle_at(k, hi) > right:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid <= lo or mid >= hi:
            break
        if _angle_at(k, mid) > right:
            lo = mid
        else:
            hi = mid
    a = (lo + hi) / 2
    normals, verts = _regular_polygon(k, a)
    refl = [Isometry(reflection_matrix(n)) for n in normals]
    return PolygonModel(k, float(a), normals, verts, refl, system)


def represent(w: GroupElement, model: PolygonModel) -> Isometry:
    """The isometry of ``w``, memoized on the model by normal form."""
    g = model._rep.get(w.word)
    if g is None:
        if not w.word:
            g = Isometry.identity()
        else:
            sys = w.system
            g = model.reflections[w.word[0]] @ represent(sys.elem(w.word[1:]), model)
        model._rep[w.word] = g
    return g


def orbit_point(w: GroupElement, model: PolygonModel) -> np.ndarray:
    """``w . o``."""
    return represent(w, model).matrix[:, 2].copy()


def dist(p, q):
    c = -lorentz(p, q)
    return np.arccosh(np.maximum(c, 1))


def gromov(x, y, z):
    """``(x|y)_z``."""
    return (dist(z, x) + dist(z, y) - dist(x, y)) / 2


def busemann(b, x, y):
    """``beta_b(x, y) = lim d(y, c) - d(x, c)`` as ``c -> b``; ``b`` is an angle."""
    xi = boundary_vector(b)
    return np.log(lorentz(y, xi) / lorentz(x, xi))


def gromov_boundary(x, b, z):
    """``(x|b)_z`` via ``(x|y)_z -> (d(z, x) + beta_b(x, z)) / 2``."""
    return (dist(z, x) + busemann(b, x, z)) / 2


def ray_point(x, b, t) -> np.ndarray:
    """Point at distance ``t`` from ``x`` on the geodesic ray toward the boundary angle ``b``."""
    x = np.asarray(x, dtype=FLOAT)
    xi = boundary_vector(b)
    # unit tangent at x pointing at b
    u = xi + lorentz(xi, x) * x
    u = u / np.sqrt(lorentz(u, u))
    t = FLOAT(t)
    return np.cosh(t) * x + np.sinh(t) * u


def rn_derivative(g: Isometry, b, eta: float = 1.0):
    """``d(g_* l)/dl`` at ``b``: ``exp(-eta * beta_b(o, g o))``.

    With ``g . o`` at distance ``d`` in direction ``phi`` the base is
    ``cosh d - sinh d cos(b - phi) = e^-d cos^2(u/2) + e^d sin^2(u/2)``;
    the second form does not cancel near the peak ``b = phi``.
    """
    phi, d, _, _ = g.cartan()
    ed = np.exp(d)
    s2 = np.sin((np.asarray(b, dtype=FLOAT) - phi) / 2) ** 2
    return ((1 - s2) / ed + ed * s2) ** (-eta)


def tau(w: GroupElement, b, model: PolygonModel, eps: float = 0.0):
    """``[d(w_* l)/dl (b)]^(1/2 + i eps)``; real when ``eps == 0``."""
    r = rn_derivative(represent(w, model), b)
    if eps == 0:
        return np.sqrt(r)
    return np.exp((0.5 + 1j * eps) * np.log(r))


def limit_point(w: GroupElement, model: PolygonModel) -> float:
    """Endpoint of the ray from ``o`` through ``w . o``."""
    if not w.word:
        raise CoxeterError("limit point of the identity is undefined")
    p = orbit_point(w, model)
    return float(canonical_angle(np.arctan2(p[1], p[0])))


# -- walls as geodesics ------------------------------------------------------


@dataclass(frozen=True)
class WallGeometry:
    """Unit normal of a wall, oriented so that ``o`` is on the negative side.

    The far arc is ``|theta - center| < half_width`` (mod 2 pi).
    """

    normal: np.ndarray
    center: FLOAT
    half_width: FLOAT

    @property
    def arc(self) -> tuple[float, float]:
        return (
            float(canonical_angle(self.center - self.half_width)),
            float(canonical_angle(self.center + self.half_width)),
        )


def wall_geometry(H: Wall, model: PolygonModel) -> WallGeometry:
    g = model._wall_cache.get(H.reflection.word)
    if g is None:
        u, s = H.canonical
        n = represent(u, model).apply(model.normals[s])
        if lorentz(ORIGIN, n) > 0:
            n = -n
        # unit spacelike normal: A^2 - n2^2 = 1, so cos = n2/A and sin = 1/A
        g = WallGeometry(n, np.arctan2(n[1], n[0]), np.arctan2(FLOAT(1), n[2]))
        model._wall_cache[H.reflection.word] = g
    return g


def wall_arc(H: Wall, model: PolygonModel) -> tuple[float, float]:
    """Endpoints ``(theta1, theta2)`` of the wall; the far arc runs counterclockwise from theta1 to theta2."""
    return wall_geometry(H, model).arc


def angular_offset(theta, center):
    """Signed offset in ``[-pi, pi)``."""
    return np.mod(np.asarray(theta, dtype=FLOAT) - center + PI, TWO_PI) - PI


def classify(H: Wall, theta, model: PolygonModel, gap: float = 1e-12):
    """``(far, degenerate)`` boolean arrays; degenerate points are within ``gap`` of an endpoint."""
    g = wall_geometry(H, model)
    off = np.abs(angular_offset(theta, g.center)) - g.half_width
    return off < 0, np.abs(off) <= gap


def far_mask(H: Wall, theta, model: PolygonModel, gap: float = 1e-12) -> np.ndarray:
    """Vectorized boundary side test; raises on points within ``gap`` of an endpoint."""
    far, degenerate = classify(H, theta, model, gap)
    if np.any(degenerate):
        raise DegenerateError(f"boundary point on an endpoint of wall {H.reflection}")
    return far


def boundary_side(H: Wall, b, model: PolygonModel, gap: float = 1e-12) -> Side:
    return Side.FAR if bool(far_mask(H, b, model, gap)) else Side.NEAR


def side_oracle(b, model: PolygonModel, gap: float = 1e-12):
    """Predicate ``H -> b is on the far side of H`` for the walls module."""
    return lambda H: boundary_side(H, b, model, gap) is Side.FAR


def point_side(H: Wall, p, model: PolygonModel) -> Side:
    """Side of an interior point."""
    return Side.FAR if lorentz(p, wall_geometry(H, model).normal) > 0 else Side.NEAR


def distance_to_walls(p, walls: list[Wall], model: PolygonModel) -> float:
    """Distance from ``p`` to the intersection of pairwise orthogonal walls (one or two)."""
    if not walls:
        raise ValueError("need at least one wall")
    s = sum(lorentz(p, wall_geometry(H, model).normal) ** 2 for H in walls)
    if len(walls) == 1:
        return float(np.arcsinh(np.sqrt(s)))
    return float(np.arccosh(np.sqrt(1 + s)))


# -- metrics of the Coxeter complex -------------------------------------------


def chamber_distance(x: GroupElement, y: GroupElement, model: PolygonModel) -> float:
    """``|x - y|``: distance between the basepoint copies of two chambers."""
    return float(dist(orbit_point(x, model), orbit_point(y, model)))


def mix_distance(x: GroupElement, y: GroupElement, q, model: PolygonModel, eta: float = 1.0) -> float:
    """``|x - y| + sum_s ln(q_s) / eta * l_s(x, y)``."""
    d = multiply(x.inverse(), y).multi_length
    return chamber_distance(x, y, model) + sum(math.log(qs) / eta * n for qs, n in zip(q, d))


def mix_busemann(b, x: GroupElement, y: GroupElement, q, model: PolygonModel, eta: float = 1.0) -> float:
    """Busemann function of the mix metric: geometric plus weighted gallery parts."""
    geo = float(busemann(b, orbit_point(x, model), orbit_point(y, model)))
    gal = gallery_busemann(x, y, side_oracle(b, model), multi=True)
    return geo + sum(math.log(qs) / eta * n for qs, n in zip(q, gal))


@dataclass(frozen=True)
class GeometryConfig:
    """Constants of the hyperbolic plane used by the estimates."""

    delta: float = math.log(3.0)
    eta: float = 1.0
    measure_mass: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.eta != 1.0:
            raise ValueError("only the hyperbolic plane (eta = 1) is supported")


# -- independent oracles for the wall order ----------------------------------------


def arc_relation(H: Wall, H2: Wall, model: PolygonModel, tol: float = 1e-12) -> str:
    """``'<'``, ``'>'`` or ``'x'`` (crossing) from far-arc nesting.

    For walls separating ``o`` from a common point the far arcs overlap, so
    they are either nested (the outer wall is closer to ``o``) or interleaved.
    """
    a, b = wall_geometry(H, model), wall_geometry(H2, model)
    off = float(np.abs(angular_offset(b.center, a.center)))
    if off + b.half_width <= a.half_width + tol:
        return "<"
    if off + a.half_width <= b.half_width + tol:
        return ">"
    if off >= a.half_width + b.half_width - tol:
        raise ValueError("far arcs are disjoint; walls do not share a far point")
    return "x"


def sampled_relations(walls: list[Wall], points, model: PolygonModel) -> list[list[str]]:
    """Relation matrix from the sides of sample points.

    ``H < H2`` when no sample is beyond ``H2`` but before ``H``; crossing
    when every quadrant is occupied.  Entries are ``'<'``, ``'>'``, ``'x'``
    or ``'?'`` when the samples do not decide.
    """
    P = np.asarray(points, dtype=FLOAT)
    far = np.array([lorentz(P, wall_geometry(H, model).normal) > 0 for H in walls])
    fn = far.astype(np.int64) @ (~far).astype(np.int64).T  # fn[i, j]: beyond i, before j
    n = len(walls)
    out = [["=" if i == j else "?" for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = fn[i, j] > 0, fn[j, i] > 0
            if a and b:
                out[i][j] = "x"
            elif a:
                out[i][j] = "<"
            elif b:
                out[i][j] = ">"
    return out
