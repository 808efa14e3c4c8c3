"""Verification checks shared by the command line and the test-suite.

Every check returns a :class:`Check` with a pass flag and the measured
quantities.  Sizes come from a :class:`SuiteConfig`; the defaults are the
acceptance-scale values, :meth:`SuiteConfig.light` is a quick variant.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import averaging, estimates
from .boundary import (
    ArcSet,
    BoundaryGrid,
    GridFunction,
    PointFunction,
    RepParams,
    apply_sq,
    apply_w1,
    apply_wq_closed,
    apply_wq_composed,
    hermitian_residual,
    operator_matrix,
)
from .coxeter import CoxeterSystem, ball, spheres
from .hecke import HeckeElement, HeckeParams, mul_antichain, mul_recursive, wall_data
from .hyperbolic import (
    FLOAT,
    PolygonModel,
    arc_relation,
    build_polygon,
    busemann,
    orbit_point,
    point_at,
    represent,
    rn_derivative,
    sampled_relations,
)

HECKE_Q = (
    (Fraction(1),),
    (Fraction(3, 2),),
    (Fraction(2),),
    (Fraction(3),),
    (Fraction(2), Fraction(3), Fraction(2), Fraction(3), Fraction(2)),
)


@dataclass
class Check:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"


@dataclass(frozen=True)
class SuiteConfig:
    k: int = 5
    q: tuple = (Fraction(2),)
    seed: int = 0
    N: int = 4096
    hecke_lmax: int = 6
    hecke_spot_stride: int = 97
    rep_lmax: int = 6
    # words the grid of size N resolves; longer ones are checked on a 4N grid
    unit_lmax: int = 5
    rep_points: int = 256
    relation_points: int = 1000
    est_lmax: int = 8
    samples: int = 64
    walls_lmax: int = 8
    geometry_triples: int = 1000
    t: tuple = (4.0, 6.0, 8.0, 10.0)
    mesh: int = 12
    R_radius: int = 6

    @classmethod
    def light(cls, **kw) -> "SuiteConfig":
        base = cls(hecke_lmax=3, rep_lmax=3, unit_lmax=2, rep_points=64, relation_points=200, est_lmax=5, samples=16,
                   walls_lmax=5, geometry_triples=200, N=1024, t=(4.0, 6.0), mesh=8)
        return replace(base, **kw)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["q"] = [str(x) for x in self.q]
        d["t"] = list(self.t)
        return d


def qvector(q, k: int) -> tuple:
    q = tuple(q)
    return q * k if len(q) == 1 else q


def hecke_sets(k: int) -> list[tuple]:
    return [qvector(q, k) for q in HECKE_Q if len(q) in (1, k)]


def rep_sets(k: int, eps_values=(0.0, 0.7)) -> list[RepParams]:
    return [RepParams(tuple(float(x) for x in q), e) for e in eps_values for q in hecke_sets(k)]


def test_function() -> PointFunction:
    """Smooth part plus a jump, complex valued."""
    return PointFunction.from_callable(lambda t: np.exp(np.cos(t)) + 1j * np.sin(3 * t) + ((t > 1) & (t < 2.5)))


def _points(n: int, seed: int) -> np.ndarray:
    return np.sort(np.random.default_rng(seed).uniform(0, 2 * math.pi, n)).astype(FLOAT)


# -- 1, 2: the algebra --------------------------------------------------------------


def check_hecke(sys: CoxeterSystem, cfg: SuiteConfig) -> Check:
    """Anti-chain product equals recursive product on basis elements.

    With indeterminate parameters the products are polynomial identities,
    so agreement implies agreement for every specialization; exact rational
    spot checks cover each listed parameter set as well.
    """
    B = ball(sys, cfg.hecke_lmax)
    P = HeckeParams.symbolic(sys)
    bad = 0
    for w in B:
        for u in B:
            f = HeckeElement.basis(u, P.one())
            if mul_antichain(w, f, P) != mul_recursive(w, f, P):
                bad += 1
    spot = 0
    spot_bad = 0
    pairs = [(w, u) for w in B for u in B][:: cfg.hecke_spot_stride]
    for q in hecke_sets(sys.rank):
        Pq = HeckeParams(q, sys)
        for w, u in pairs:
            f = HeckeElement.basis(u)
            spot += 1
            if mul_antichain(w, f, Pq) != mul_recursive(w, f, Pq):
                spot_bad += 1
    return Check(
        "hecke_oracle_equivalence",
        bad == 0 and spot_bad == 0,
        {"pairs": len(B) ** 2, "symbolic_mismatches": bad, "rational_spot_checks": spot, "rational_mismatches": spot_bad},
    )


def check_quadratic(model: PolygonModel, cfg: SuiteConfig) -> Check:
    sys = model.system
    alg_bad = 0
    for q in [HeckeParams.symbolic(sys)] + [HeckeParams(q, sys) for q in hecke_sets(sys.rank)]:
        for s in range(sys.rank):
            g = sys.gen(s)
            lhs = mul_recursive(g, HeckeElement.basis(g, q.one()), q)
            rhs = HeckeElement.basis(g, q.one()).scale(q[s] - 1) + HeckeElement.basis(sys.identity, q.one()).scale(q[s])
            if lhs != rhs:
                alg_bad += 1
    x = _points(cfg.relation_points, cfg.seed)
    f = test_function()
    worst = 0.0
    for p in rep_sets(sys.rank):
        for s in range(sys.rank):
            sf = apply_sq(s, f, p, model)
            ssf = apply_sq(s, sf, p, model)
            r = np.abs(ssf(x) - ((p.q[s] - 1) * sf(x) + p.q[s] * f(x)))
            worst = max(worst, float(np.nanmax(r)))
    return Check("quadratic_relations", alg_bad == 0 and worst <= 1e-9, {"algebra_mismatches": alg_bad, "pointwise_max_residual": worst, "points": len(x)})


# -- 3, 4: the representation ---------------------------------------------------------


def check_closed_form(model: PolygonModel, cfg: SuiteConfig) -> Check:
    x = _points(cfg.rep_points, cfg.seed + 1)
    f = test_function()
    worst = 0.0
    skipped = 0
    per_set = {}
    for p in rep_sets(model.system.rank):
        m = 0.0
        for w in ball(model.system, cfg.rep_lmax):
            a = apply_wq_closed(w, f, p, model)(x, False)
            b = apply_wq_composed(w, f, p, model)(x, False)
            d = np.abs(a - b)
            skipped += int(np.count_nonzero(np.isnan(d)))
            if np.any(~np.isnan(d)):
                m = max(m, float(np.nanmax(d)))
        per_set[f"q={list(p.q)},eps={p.eps}"] = m
        worst = max(worst, m)
    return Check("closed_form_identity", worst <= 1e-9, {"max_residual": worst, "skipped_points": skipped, "per_parameter_set": per_set})


def _norm_error(words, f, grid: BoundaryGrid, model: PolygonModel) -> float:
    fn = GridFunction.sample(f, grid).norm()
    worst = 0.0
    for eps in (0.0, 0.7):
        for w in words:
            g = GridFunction.sample(apply_w1(w, f, model, eps), grid).norm()
            worst = max(worst, abs(g - fn) / fn)
    return worst


def check_unitarity(model: PolygonModel, cfg: SuiteConfig) -> Check:
    """Norm preservation at q = 1 and Hermitian Galerkin matrices at eps = 0.

    tau_w peaks like exp d(o, w o) with width exp(-d), so the trapezoid
    norm is only meaningful for words the grid resolves: lengths up to
    ``unit_lmax`` on N points, the remaining lengths up to ``rep_lmax`` on 4N.
    """
    N = cfg.N
    f = PointFunction.from_callable(lambda t: np.exp(np.cos(t)) + 1j * np.sin(3 * t))
    layers = spheres(model.system, cfg.rep_lmax)
    short = [w for sp in layers[: cfg.unit_lmax + 1] for w in sp]
    long_ = [w for sp in layers[cfg.unit_lmax + 1 :] for w in sp]
    err = _norm_error(short, f, BoundaryGrid(N), model)
    err_long = _norm_error(long_, f, BoundaryGrid(4 * N), model) if long_ else 0.0
    herm = {}
    for n in (N, 2 * N):
        r = 0.0
        for p in [RepParams(tuple(float(x) for x in q)) for q in hecke_sets(model.system.rank)]:
            for s in range(model.system.rank):
                r = max(r, hermitian_residual(operator_matrix(model.system.gen(s), p, BoundaryGrid(n), model)))
        herm[n] = r
    ok = err <= 10 / N and err_long <= 10 / (4 * N) and herm[N] <= 10 / N and herm[2 * N] <= 10 / (2 * N)
    return Check(
        "unitarity_self_adjointness",
        ok,
        {
            "N": N,
            "norm_relative_error": err,
            "norm_lengths": [0, cfg.unit_lmax],
            "norm_relative_error_4N": err_long,
            "norm_lengths_4N": [cfg.unit_lmax + 1, cfg.rep_lmax] if long_ else [],
            "hermitian_residual": {str(k): v for k, v in herm.items()},
            "tolerance": 10 / N,
        },
    )


# -- 5, 6: estimates --------------------------------------------------------------------


def run_estimates(model: PolygonModel, cfg: SuiteConfig) -> estimates.EstimateReport:
    q = float(qvector(cfg.q, model.system.rank)[0]) if len(set(cfg.q)) == 1 else None
    params = RepParams(tuple(float(x) for x in qvector(cfg.q, model.system.rank))) if q is None else RepParams.uniform(q, model.system.rank)
    return estimates.sweep(cfg.est_lmax, params, cfg.samples, cfg.seed, model)


def check_sandwich(report: estimates.EstimateReport) -> Check:
    fails = report.failure_counts()
    n = fails.get("sandwich_lower", 0) + fails.get("sandwich_upper", 0)
    return Check("sandwich_inequality", n == 0 and "sandwich_lower" in fails, {**report.aggregates, "failures": n})


def check_estimates(report: estimates.EstimateReport) -> Check:
    fails = report.failure_counts()
    checked = report.checked_counts()
    per = {s: {"checked": checked.get(s, 0), "failures": fails.get(s, 0)} for s in estimates.STATEMENTS}
    ok = all(v["failures"] == 0 and v["checked"] > 0 for v in per.values())
    return Check("estimate_sweep", ok, {"statements": per, "min_slack": min((r.slack for r in report.rows if r.applicable and r.statement in estimates.STATEMENTS), default=None)})


# -- 7, 8: geometry and walls -------------------------------------------------------------


def check_geometry(model: PolygonModel, cfg: SuiteConfig) -> Check:
    rng = np.random.default_rng(cfg.seed + 2)
    angle_err = max(abs(a - math.pi / 2) for a in model.angles())
    n = cfg.geometry_triples
    pts = [np.stack([point_at(a, r) for a, r in zip(rng.uniform(0, 2 * math.pi, n), rng.uniform(0, 4, n))]) for _ in range(3)]
    b = rng.uniform(0, 2 * math.pi, n).astype(FLOAT)
    x, y, z = pts
    cocycle = float(np.max(np.abs(busemann(b, x, y) + busemann(b, y, z) - busemann(b, x, z))))
    chain = 0.0
    for s in range(model.system.rank):
        r = model.reflections[s]
        chain = max(chain, float(np.max(np.abs(rn_derivative(r, r.apply_boundary(b)) * rn_derivative(r, b) - 1))))
    grid = BoundaryGrid(cfg.N)
    th = grid.angles.astype(FLOAT)
    mass = 0.0
    for w in ball(model.system, 4):
        mass = max(mass, abs(float(np.mean(rn_derivative(represent(w, model), th))) - 1))
    ok = angle_err <= 1e-9 and cocycle <= 1e-9 and chain <= 1e-9 and mass <= 10 / cfg.N
    return Check(
        "geometry",
        ok,
        {"angle_error": angle_err, "cocycle_residual": cocycle, "reflection_chain_rule": chain, "mass_error": mass, "N": cfg.N},
    )


def check_walls(model: PolygonModel, cfg: SuiteConfig) -> Check:
    """Gate-test order versus far-arc nesting versus interior side sampling."""
    elems = ball(model.system, cfg.walls_lmax)
    centers = np.stack([orbit_point(w, model) for w in elems])
    pairs = 0
    bad_arc = 0
    bad_sample = 0
    for w in elems:
        P = wall_data(w).poset
        n = len(P.walls)
        if n < 2:
            continue
        sampled = sampled_relations(P.walls, centers, model)
        for i in range(n):
            for j in range(i + 1, n):
                pairs += 1
                gate = "x" if P.commutes[i][j] else ("<" if P.less[i][j] else ">")
                if arc_relation(P.walls[i], P.walls[j], model) != gate:
                    bad_arc += 1
                if sampled[i][j] != gate:
                    bad_sample += 1
    return Check("wall_poset_cross_validation", bad_arc == 0 and bad_sample == 0,
                 {"wall_pairs": pairs, "arc_disagreements": bad_arc, "sampling_disagreements": bad_sample})


# -- 9: averaging ----------------------------------------------------------------------------

DEFAULT_ARCS = {
    "U": (0.0, 1.5),
    "V": (2.0, 4.0),
    "W": {"generic": (1.0, 3.0), "disjoint": (3.0, 4.5)},
}


def run_averaging(model: PolygonModel, cfg: SuiteConfig, arcs: dict | None = None, qs=(1.0, 2.0)) -> tuple[averaging.ExperimentResult, dict]:
    arcs = arcs or DEFAULT_ARCS
    Rinfo = averaging.quotient_diameter_bound(model, cfg.mesh, cfg.R_radius)
    U = ArcSet.between(*arcs["U"])
    V = ArcSet.between(*arcs["V"])
    Ws = {k: ArcSet.between(*v) for k, v in arcs["W"].items()}
    plist = [RepParams.uniform(q, model.system.rank) for q in qs]
    res = averaging.convergence_experiment(U, V, Ws, cfg.t, plist, model, Rinfo["R"])
    return res, Rinfo


def check_averaging(res: averaging.ExperimentResult, t_first: float, t_last: float) -> Check:
    """Trend acceptance per ``(q, W)``.

    A ``W`` with target 0 (disjoint from ``U``) must see its value drop
    below 0.05 and below the first value; any other ``W`` must see its
    error shrink.
    """
    look = {(r["t"], str(r["q"]), r["W"]): r for r in res.rows}
    trend = {}
    ok = True
    for q, name in sorted({(str(r["q"]), r["W"]) for r in res.rows}):
        a, b = look[(t_first, q, name)], look[(t_last, q, name)]
        if a["target"] == 0:
            passed = b["value"] < a["value"] and b["value"] < 0.05
            entry = {"kind": "disjoint", "value": [a["value"], b["value"]], "passed": passed}
        else:
            passed = b["error"] < a["error"]
            entry = {"kind": "generic", "error": [a["error"], b["error"]], "passed": passed}
        trend.setdefault(q, {})[name] = entry
        ok &= passed
    return Check("averaging_trend", bool(ok), {"trend": trend, **res.summary})


# -- the whole suite -------------------------------------------------------------------------


def run_all(cfg: SuiteConfig) -> list[Check]:
    sys = CoxeterSystem.polygon_group(cfg.k)
    model = build_polygon(cfg.k, sys)
    out = [
        check_hecke(sys, cfg),
        check_quadratic(model, cfg),
        check_closed_form(model, cfg),
        check_unitarity(model, cfg),
    ]
    rep = run_estimates(model, cfg)
    out += [check_sandwich(rep), check_estimates(rep), check_geometry(model, cfg), check_walls(model, cfg)]
    res, _ = run_averaging(model, cfg)
    out.append(check_averaging(res, min(cfg.t), max(cfg.t)))
    return out
