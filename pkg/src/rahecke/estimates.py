"""Numerical checks of the geometric estimates behind the sandwich inequality.

Notation: points of the tessellation are identified with orbit points
``w . o``; ``|x - y|`` is hyperbolic distance and ``|w| = |w . o - o|``.
For a set ``h`` of pairwise perpendicular walls, ``h^+`` is the
intersection of their far half-spaces and ``h`` also denotes the product
of the reflections, an isometry fixing ``cap h``.

The admissible ``h`` for a pair ``(w, z)`` (``w`` in ``h^+``, ``z`` in the
boundary of ``h^+``, ``cap h`` nonempty) are exactly the nonempty
anti-chains of P(1|z,w): every such wall separates ``o`` from both ``w``
and ``z``, and tessellation walls intersect iff their reflections commute.
The sweep therefore enumerates them exactly.
"""
from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from .boundary import RepParams
from .coxeter import CoxeterError, GroupElement, ball
from .hecke import wall_data
from .hyperbolic import (
    FLOAT,
    ORIGIN,
    GeometryConfig,
    PolygonModel,
    busemann,
    classify,
    dist,
    lorentz,
    orbit_point,
    represent,
    rn_derivative,
    wall_arc,
    wall_geometry,
)
from .walls import AntiChain, Side, side

GRACE = 1e-9

STATEMENTS = (
    "unseparated_distance",
    "shadow_gap",
    "shadow_projection",
    "tau_decay",
    "projection_nonneg",
    "half_length_product",
    "fellow_travel",
    "projection_near_cap",
)

# sample distances for interior points x on the ray toward z
RAY_TIMES = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


@dataclass
class EstimateRow:
    statement: str
    w: str
    z: float
    h: str
    lhs: float
    rhs: float
    slack: float
    checked: int = 1
    applicable: bool = True

    @property
    def passed(self) -> bool:
        tol = 0.0 if self.statement == "sandwich_lower" else GRACE
        return not self.applicable or self.slack >= -tol

    def as_list(self) -> list:
        return [
            self.statement,
            self.w,
            _fmt(self.z),
            self.h,
            _fmt(self.lhs),
            _fmt(self.rhs),
            _fmt(self.slack),
            self.checked,
            int(self.applicable),
            int(self.passed),
        ]


HEADER = ["statement", "w", "z", "h", "lhs", "rhs", "slack", "checked", "applicable", "passed"]


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{float(x):.12g}"


@dataclass
class EstimateReport:
    """Rows (worst case per statement and ``w``) and aggregate constants."""

    rows: list[EstimateRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def failures(self) -> list[EstimateRow]:
        return [r for r in self.rows if not r.passed]

    def failure_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out.setdefault(r.statement, 0)
            if not r.passed:
                out[r.statement] += 1
        return out

    def checked_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.statement] = out.get(r.statement, 0) + r.checked
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(HEADER)
        for r in self.rows:
            wr.writerow(r.as_list())
        return buf.getvalue()


# -- basic quantities ------------------------------------------------------------


def in_far_side(h: AntiChain, w: GroupElement) -> bool:
    return all(side(H, w) is Side.FAR for H in h.walls)


def proj_product(w: GroupElement, h: AntiChain, model: PolygonModel) -> float:
    """``(w | cap h) = |w| - |w - hw| / 2`` for ``w`` in ``h^+``."""
    if not h.walls:
        raise CoxeterError("h must be nonempty")
    if not in_far_side(h, w):
        raise CoxeterError(f"{w} is not on the far side of every wall of {h}")
    wo = orbit_point(w, model)
    hwo = represent(h.product, model).apply(wo)
    return float(dist(ORIGIN, wo) - dist(wo, hwo) / 2)


def geodesic_point(a, b, t):
    """Point at distance ``t`` from ``a`` toward ``b`` (``t`` may be an array)."""
    a = np.asarray(a, dtype=FLOAT)
    b = np.asarray(b, dtype=FLOAT)
    u = b + lorentz(a, b) * a
    n = np.sqrt(lorentz(u, u))
    u = u / n if n > 0 else np.array([1, 0, 0], dtype=FLOAT)
    t = np.asarray(t, dtype=FLOAT)[..., None]
    return np.cosh(t) * a + np.sinh(t) * u


def ray_points(zs, times) -> np.ndarray:
    """Points ``gamma^z(t)`` from ``o``; shape ``(len(zs), len(times), 3)``."""
    zs = np.asarray(zs, dtype=FLOAT)
    t = np.asarray(times, dtype=FLOAT)
    c, s = np.cos(zs)[:, None], np.sin(zs)[:, None]
    sh, ch = np.sinh(t)[None, :], np.cosh(t)[None, :]
    return np.stack([sh * c, sh * s, ch + 0 * c], axis=-1)


def distance_to_cap(points, normals) -> np.ndarray:
    """Distance to the intersection of one or two perpendicular walls, vectorized over points."""
    s = sum(lorentz(points, n) ** 2 for n in normals)
    if len(normals) == 1:
        return np.arcsinh(np.sqrt(s))
    return np.arccosh(np.sqrt(1 + s))


def boundary_gromov_o(points, zs):
    """``(x | z)_o = (|x| + beta_z(x, o)) / 2`` for matching arrays of points and angles."""
    return (dist(ORIGIN, points) + busemann(zs, points, ORIGIN)) / 2


def _hlabel(h: AntiChain) -> str:
    return "{" + ",".join(str(H.reflection) for H in h) + "}"


def admissible(w: GroupElement, z: float, model: PolygonModel) -> list[AntiChain]:
    """Nonempty anti-chains of P(1|z,w)."""
    data = wall_data(w)
    inside = 0
    for i, H in enumerate(data.poset.walls):
        far, bad = classify(H, z, model)
        if bool(bad):
            from .walls import DegenerateError

            raise DegenerateError(f"z on an endpoint of {H.reflection}")
        if bool(far):
            inside |= 1 << i
    return [data.chains[k] for k, m in enumerate(data.chain_mask) if m and (m & ~inside) == 0]


def s_value(w: GroupElement, z: float, h: AntiChain, model: PolygonModel) -> float:
    """``s(h) = min{(z|w), (w|cap h)}``."""
    zw = float(boundary_gromov_o(orbit_point(w, model), FLOAT(z)))
    return min(zw, proj_product(w, h, model))


def max_window(svals: Sequence[float], zw: float) -> int:
    """Largest number of values in a closed interval of length ``<= 1`` inside ``[0, zw]``."""
    vals = np.sort(np.clip(np.asarray(svals, dtype=float), 0.0, max(zw, 0.0)))
    if vals.size == 0:
        return 0
    if zw <= 1:
        return int(vals.size)
    best = 0
    for a in np.concatenate([vals, vals - 1.0]):
        a = min(max(a, 0.0), zw - 1.0)
        best = max(best, int(np.count_nonzero((vals >= a) & (vals <= a + 1.0))))
    return best


def window_count(w: GroupElement, z: float, interval: tuple[float, float], model: PolygonModel) -> int:
    """Number of admissible ``h`` with ``s(h)`` in the closed ``interval``."""
    lo, hi = interval
    zw = float(boundary_gromov_o(orbit_point(w, model), FLOAT(z)))
    if lo < -GRACE or hi > zw + GRACE or hi - lo > 1 + GRACE or hi < lo:
        raise ValueError(f"interval {interval} must lie in [0, (z|w)] = [0, {zw:.6g}] with length <= 1")
    return sum(1 for h in admissible(w, z, model) if lo <= s_value(w, z, h, model) <= hi)


def q_constant(params: RepParams, d: int = 2) -> float:
    """``Q``: max of ``prod ((q_s - 1)/sqrt(q_s))`` over 0-1 multi-indices of total degree 1..d."""
    ratios = [(q - 1) / math.sqrt(q) for q in params.q]
    best = 0.0
    for bits in iproduct((0, 1), repeat=len(ratios)):
        deg = sum(bits)
        if 1 <= deg <= d:
            best = max(best, math.prod(r for r, b in zip(ratios, bits) if b))
    return best


def sandwich_constant(Q: float, M: int, geo: GeometryConfig) -> float:
    return 1 + math.exp(2 * geo.delta) * Q * M / (1 - math.exp(-geo.eta))


# -- per-w vectorized evaluation ---------------------------------------------------


class _WCase:
    """Everything about one ``w`` evaluated against an array of boundary angles."""

    def __init__(self, w: GroupElement, zs: np.ndarray, model: PolygonModel, geo: GeometryConfig):
        self.w = w
        self.zs = zs
        self.model = model
        self.geo = geo
        self.data = wall_data(w, cache=False)
        self.wo = orbit_point(w, model)
        self.abs_w = dist(ORIGIN, self.wo)
        inside = np.zeros(zs.shape, dtype=np.int64)
        for i, H in enumerate(self.data.poset.walls):
            far, bad = classify(H, zs, model)
            if bad.any():
                from .walls import DegenerateError

                raise DegenerateError(f"sample on an endpoint of {H.reflection}")
            inside |= far.astype(np.int64) << i
        self.inside = inside
        self.zw = boundary_gromov_o(np.broadcast_to(self.wo, zs.shape + (3,)), zs)
        self.tau_w = np.sqrt(rn_derivative(represent(w, model), zs))

    def chains(self):
        """Nonempty anti-chains with their admissibility mask over ``zs``."""
        for k, m in enumerate(self.data.chain_mask):
            if m:
                yield k, self.data.chains[k], (self.inside & m) == m


def _row(statement, w, zs, hl, lhs, rhs, mask=None) -> EstimateRow:
    """Worst-case row over the entries selected by ``mask``."""
    lhs, rhs = np.broadcast_arrays(np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float))
    zs = np.broadcast_to(np.asarray(zs, dtype=float), lhs.shape)
    if mask is not None:
        mask = np.broadcast_to(mask, lhs.shape)
        lhs, rhs, zs = lhs[mask], rhs[mask], zs[mask]
    lhs, rhs, zs = lhs.ravel(), rhs.ravel(), zs.ravel()
    if lhs.size == 0:
        return EstimateRow(statement, str(w), float("nan"), hl, float("nan"), float("nan"), float("nan"), 0, False)
    slack = rhs - lhs
    i = int(np.argmin(slack))
    return EstimateRow(statement, str(w), float(zs[i]), hl, float(lhs[i]), float(rhs[i]), float(slack[i]), int(slack.size))


def _merge(rows: list[EstimateRow]) -> EstimateRow:
    """Keep the worst applicable row and add up the counts."""
    live = [r for r in rows if r.applicable]
    if not live:
        return rows[0]
    worst = min(live, key=lambda r: r.slack)
    worst.checked = sum(r.checked for r in live)
    return worst


def statement_rows(case: _WCase, h: AntiChain, zmask: np.ndarray) -> list[EstimateRow]:
    """All geometric statements for one ``(w, h)`` over the admissible samples."""
    model, geo, w = case.model, case.geo, case.w
    delta, eta = geo.delta, geo.eta
    hl = _hlabel(h)
    hiso = represent(h.product, model)
    wo = case.wo
    hwo = hiso.apply(wo)
    abs_w = case.abs_w
    ho = hiso.matrix[:, 2]
    abs_h = dist(ORIGIN, ho)
    proj = abs_w - dist(wo, hwo) / 2
    normals = [wall_geometry(H, model).normal for H in h.walls]
    rows = []

    zs = case.zs[zmask]
    # interior points on the rays toward admissible z, kept when in h^+
    X = ray_points(zs, RAY_TIMES)
    xin = np.ones(X.shape[:2], dtype=bool)
    for n in normals:
        xin &= lorentz(X, n) > 0
    zsx = np.broadcast_to(zs[:, None], X.shape[:2])

    # points not separated by h keep their distance order
    rows.append(
        _merge(
            [
                _row("unseparated_distance", w, np.array(0.0), hl, dist(ORIGIN, hwo), dist(ORIGIN, wo)),
                _row("unseparated_distance", w, zsx, hl, dist(X, wo), dist(X, hwo), xin),
            ]
        )
    )
    # 2(x|hw) - |hw| = |x| - |x - hw|
    absx = dist(ORIGIN, X)
    lhs = absx - dist(X, hwo)
    rows.append(_row("shadow_gap", w, zsx, hl, lhs, absx - dist(X, wo), xin))
    rows.append(_row("shadow_projection", w, zsx, hl, lhs, 2 * proj - abs_w + 2 * delta, xin))
    # decay of tau at boundary points
    tau_hw = np.sqrt(rn_derivative(hiso @ represent(w, model), zs))
    zw = case.zw[zmask]
    s = np.minimum(zw, proj)
    bound = np.exp(eta * delta) * np.exp(eta * s) * np.exp(-eta * abs_w / 2)
    rows.append(_row("tau_decay", w, zs, hl, tau_hw, bound))
    # projection onto cap h is nonnegative
    rows.append(_row("projection_nonneg", w, np.array(float("nan")), hl, 0.0, proj))
    # Gromov product with h: interior (w and ray points) and boundary versions
    gw = (abs_w + abs_h - dist(wo, ho)) / 2
    gx = (absx + abs_h - dist(X, ho)) / 2
    gz = (abs_h + busemann(zs, ho, ORIGIN)) / 2
    rows.append(
        _merge(
            [
                _row("half_length_product", w, np.array(float("nan")), hl, abs_h / 2, gw),
                _row("half_length_product", w, zsx, hl, np.broadcast_to(abs_h / 2, gx.shape), gx, xin),
                _row("half_length_product", w, zs, hl, np.broadcast_to(abs_h / 2, gz.shape), gz),
            ]
        )
    )
    # gamma^w([|h|/2, (w|cap h)]) within delta of cap h
    t0, t1 = float(abs_h / 2), float(proj)
    if t1 >= t0:
        ts = np.linspace(t0, t1, 9)
        d = distance_to_cap(geodesic_point(ORIGIN, wo, ts), normals)
        rows.append(_row("fellow_travel", w, np.array(float("nan")), hl, d, np.full(d.shape, delta)))
    else:
        rows.append(EstimateRow("fellow_travel", str(w), float("nan"), hl, t0, t1, float("nan"), 0, False))
    # gamma^w(s(h)) within 2 delta of cap h
    d = distance_to_cap(geodesic_point(ORIGIN, wo, s), normals)
    rows.append(_row("projection_near_cap", w, zs, hl, d, np.full(d.shape, 2 * delta)))
    return rows


def verify_statements(w: GroupElement, h: AntiChain, z: float, model: PolygonModel, geo: GeometryConfig | None = None) -> list[EstimateRow]:
    """Rows for a single ``(w, h, z)``; inapplicable rows when the hypotheses fail."""
    geo = geo or GeometryConfig()
    zs = np.array([z], dtype=FLOAT)
    case = _WCase(w, zs, model, geo)
    if not h.walls or not in_far_side(h, w):
        return [EstimateRow(s, str(w), float(z), _hlabel(h), float("nan"), float("nan"), float("nan"), 0, False) for s in STATEMENTS]
    zmask = np.ones(1, dtype=bool)
    for H in h.walls:
        far, _ = classify(H, zs, model)
        zmask &= far
    if not zmask.any():
        return [EstimateRow(s, str(w), float(z), _hlabel(h), float("nan"), float("nan"), float("nan"), 0, False) for s in STATEMENTS]
    return statement_rows(case, h, zmask)


def normalized_sum(case: _WCase, params: RepParams) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """``q^{-l(w)/2} (w^q 1)(z)`` summed term by term, plus ``s(h)`` per admissible ``h``.

    Starts from ``tau(w, z)`` and adds non-negative terms, so the result
    is never below ``tau(w, z)`` in floating point either.
    """
    ratios = [(q - 1) / math.sqrt(q) for q in params.q]
    mid = case.tau_w.astype(float).copy()
    svals = []
    wiso = represent(case.w, case.model)
    for k, h, zmask in case.chains():
        if not zmask.any():
            continue
        coef = math.prod(ratios[s] ** n for s, n in enumerate(case.data.chain_types[k]) if n)
        hiso = represent(h.product, case.model)
        zs = case.zs[zmask]
        if coef:
            mid[zmask] += coef * np.sqrt(rn_derivative(hiso @ wiso, zs)).astype(float)
        hwo = hiso.apply(case.wo)
        proj = float(case.abs_w - dist(case.wo, hwo) / 2)
        svals.append((zmask, np.minimum(case.zw[zmask].astype(float), proj)))
    return mid, svals


def verify_sandwich(w: GroupElement, z: float, params: RepParams, model: PolygonModel, C: float) -> list[EstimateRow]:
    """Lower and upper sandwich rows for one ``(w, z)`` and a given constant ``C``."""
    if params.eps != 0:
        raise ValueError("the sandwich inequality is stated for eps = 0")
    case = _WCase(w, np.array([z], dtype=FLOAT), model, GeometryConfig())
    mid, _ = normalized_sum(case, params)
    lhs = float(case.tau_w[0])
    return [
        EstimateRow("sandwich_lower", str(w), float(z), "", lhs, float(mid[0]), float(mid[0]) - lhs),
        EstimateRow("sandwich_upper", str(w), float(z), "", float(mid[0]), C * lhs, C * lhs - float(mid[0])),
    ]


def sample_boundary(n: int, seed: int, avoid: Sequence[float], gap: float = 1e-6) -> np.ndarray:
    """Stratified seeded angles, each at least ``gap`` away from every angle in ``avoid``."""
    rng = np.random.default_rng(seed)
    avoid = np.sort(np.mod(np.asarray(avoid, dtype=float), 2 * math.pi))
    out = []
    for j in range(n):
        while True:
            z = 2 * math.pi * (j + rng.uniform()) / n
            if avoid.size == 0:
                break
            i = np.searchsorted(avoid, z)
            near = [avoid[i % avoid.size], avoid[i - 1]]
            gapz = min(abs((z - a + math.pi) % (2 * math.pi) - math.pi) for a in near)
            if gapz >= gap:
                break
        out.append(z)
    return np.array(out, dtype=FLOAT)


def sweep(
    lmax: int,
    params: RepParams,
    samples: int,
    seed: int,
    model: PolygonModel,
    geo: GeometryConfig | None = None,
) -> EstimateReport:
    """Full sweep over ``l(w) <= lmax`` and seeded boundary samples."""
    geo = geo or GeometryConfig()
    sys = model.system
    elements = ball(sys, lmax)
    endpoints = set()
    for w in elements:
        for H in wall_data(w, cache=False).poset.walls:
            endpoints.update(wall_arc(H, model))
    zs = sample_boundary(samples, seed, sorted(endpoints))
    report = EstimateReport()
    M_emp = 0
    mids, taus = [], []
    per_w_rows: list[list[EstimateRow]] = []
    for w in elements:
        case = _WCase(w, zs, model, geo)
        rows_w: dict[str, list[EstimateRow]] = {s: [] for s in STATEMENTS}
        for k, h, zmask in case.chains():
            if not zmask.any():
                continue
            for r in statement_rows(case, h, zmask):
                rows_w[r.statement].append(r)
        mid, svals = normalized_sum(case, params)
        mids.append(mid)
        taus.append(case.tau_w.astype(float))
        if svals:
            zw = case.zw.astype(float)
            for j in range(zs.size):
                vals = [sv[np.count_nonzero(zm[:j])] for zm, sv in svals if zm[j]]
                M_emp = max(M_emp, max_window(vals, zw[j]))
        per_w_rows.append([_merge(v) for s, v in rows_w.items() if v])
    Q = q_constant(params)
    C = sandwich_constant(Q, M_emp, geo)
    max_ratio = 1.0
    for w, rows, mid, tau_w in zip(elements, per_w_rows, mids, taus):
        report.rows.extend(rows)
        lower = _row("sandwich_lower", w, zs, "", tau_w, mid)
        upper = _row("sandwich_upper", w, zs, "", mid, C * tau_w)
        report.rows.extend([lower, upper])
        max_ratio = max(max_ratio, float(np.max(mid / tau_w)))
    report.aggregates = {
        "lmax": lmax,
        "samples": samples,
        "seed": seed,
        "q": list(params.q),
        "delta": geo.delta,
        "eta": geo.eta,
        "M_emp": M_emp,
        "Q": Q,
        "C": C,
        "max_ratio": max_ratio,
        "elements": len(elements),
    }
    return report
