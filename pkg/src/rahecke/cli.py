"""Command line: ``rahecke <group> <action> [options]``.

Configuration comes from an optional flat ``key = value`` file given with
``--config``; command line flags override it.  Outputs are JSON (sorted
keys) on stdout or in ``--out``, CSV tables in ``--csv``; a one-line
human summary goes to stderr.  The exit status is 0 iff every check
passed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import averaging, estimates, suite
from .boundary import (
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
from .coxeter import CoxeterError, CoxeterSystem, ball, spheres
from .hecke import HeckeElement, HeckeParams, as_number, mul, parse_coefficient, wall_data
from .hyperbolic import build_polygon, orbit_point, to_disc, wall_arc

SCHEMA = "rahecke-report/1"

# key -> (parser, help)
KEYS = {
    "k": (int, "number of polygon sides (>= 5)"),
    "q": (str, "parameter: one value or one per generator, comma separated; rationals allowed"),
    "eps": (str, "twist of the principal series"),
    "N": (int, "grid size (power of two)"),
    "lmax": (int, "word-length cap"),
    "samples": (int, "boundary samples per element"),
    "seed": (int, "seed for numpy's default generator (PCG64)"),
    "t": (str, "comma separated layer radii"),
    "arcs": (str, "JSON file with arcs U, V and a map W"),
    "mesh": (int, "polygon mesh resolution for the layer half-width"),
    "points": (int, "sampled boundary points"),
    "profile": (str, "suite size: full or light"),
}


class ConfigError(ValueError):
    pass


def read_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = val
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Config file values overridden by flags, parsed and validated."""
    raw = read_config(getattr(args, "config", None))
    for key in KEYS:
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = str(v)
    cfg = {}
    for key, val in raw.items():
        conv = KEYS[key][0]
        try:
            cfg[key] = conv(val)
        except ValueError as e:
            raise ConfigError(f"invalid value for {key}: {val!r}") from e
    k = cfg.setdefault("k", 5)
    if k < 5:
        raise ConfigError(f"k must be >= 5, got {k}")
    if "N" in cfg and (cfg["N"] <= 0 or cfg["N"] & (cfg["N"] - 1)):
        raise ConfigError(f"N must be a power of two, got {cfg['N']}")
    if "q" in cfg:
        try:
            q = tuple(Fraction(x.strip()) for x in cfg["q"].split(","))
        except ValueError as e:
            raise ConfigError(f"invalid value for q: {cfg['q']!r}") from e
        if len(q) not in (1, k):
            raise ConfigError(f"q needs 1 or {k} entries, got {len(q)}")
        cfg["q"] = q * k if len(q) == 1 else q
    if "eps" in cfg:
        try:
            cfg["eps"] = Fraction(cfg["eps"])
        except ValueError as e:
            raise ConfigError(f"invalid value for eps: {cfg['eps']!r}") from e
    if "t" in cfg:
        try:
            cfg["t"] = tuple(float(x) for x in cfg["t"].split(","))
        except ValueError as e:
            raise ConfigError(f"invalid value for t: {cfg['t']!r}") from e
    return cfg


def rep_params(cfg: dict, analytic: bool = True) -> RepParams:
    q = cfg.get("q", (Fraction(2),) * cfg["k"])
    if analytic and any(x < 1 for x in q):
        raise ConfigError("q entries must be >= 1 for analytic subcommands")
    return RepParams(tuple(float(x) for x in q), float(cfg.get("eps", 0)))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def emit(args, payload: dict, ok: bool, summary: str, table: str | None = None) -> int:
    text = dumps({"schema": SCHEMA, "ok": ok, **payload})
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if table is not None and getattr(args, "csv", None):
        Path(args.csv).write_text(table)
    print(("ok: " if ok else "FAILED: ") + summary, file=sys.stderr)
    return 0 if ok else 1


def _system(cfg) -> CoxeterSystem:
    return CoxeterSystem.polygon_group(cfg["k"])


# -- subcommands ---------------------------------------------------------------------


def cmd_group_info(args) -> int:
    cfg = resolve(args)
    S = _system(cfg)
    L = cfg.get("lmax", 6)
    sizes = [len(s) for s in spheres(S, L)]
    payload = {
        "k": cfg["k"],
        "labels": list(S.labels),
        "commute": S.commute_matrix.astype(int).tolist(),
        "sphere_sizes": sizes,
        "ball_size": sum(sizes),
    }
    return emit(args, payload, True, f"rank {S.rank}, |B({L})| = {sum(sizes)}")


def cmd_group_ball(args) -> int:
    cfg = resolve(args)
    S = _system(cfg)
    B = ball(S, args.radius)
    payload = {"radius": args.radius, "elements": [str(w) for w in B]}
    if args.geometry:
        model = build_polygon(cfg["k"], S)
        payload["centers"] = {str(w): [float(c) for c in to_disc(orbit_point(w, model))] for w in B}
        walls = sorted({H for w in B for H in wall_data(w).poset.walls})
        payload["walls"] = [{"reflection": str(H.reflection), "type": H.type, "arc": list(wall_arc(H, model))} for H in walls]
    return emit(args, payload, True, f"{len(B)} elements")


def cmd_walls_dump(args) -> int:
    cfg = resolve(args)
    S = _system(cfg)
    w = S.parse(args.w)
    P = wall_data(w).poset
    n = len(P.walls)
    hasse = [
        [str(P.walls[i].reflection), str(P.walls[j].reflection)]
        for i in range(n)
        for j in range(n)
        if P.less[i][j] and not any(P.less[i][m] and P.less[m][j] for m in range(n))
    ]
    payload = {
        "w": str(w),
        "walls": [{"reflection": str(H.reflection), "type": H.type} for H in P.walls],
        "hasse": hasse,
        "antichains": [[str(H.reflection) for H in h] for h in P.antichains()],
    }
    return emit(args, payload, True, f"{n} walls, {len(P.antichains())} anti-chains")


def _load_element(text: str, S: CoxeterSystem) -> HeckeElement:
    p = Path(text)
    data = json.loads(p.read_text() if p.exists() else text)
    out = HeckeElement()
    for word, c in data.items():
        out = out + HeckeElement.basis(S.parse(word), parse_coefficient(str(c)))
    return out


def cmd_hecke_mul(args) -> int:
    cfg = resolve(args)
    S = _system(cfg)
    a = HeckeElement.basis(S.parse(args.w)) if args.w is not None else _load_element(args.a, S)
    b = _load_element(args.f, S)
    q = cfg.get("q", (Fraction(2),) * S.rank)
    P = HeckeParams(q, S)
    r1 = mul(a, b, P, "recursive")
    r2 = mul(a, b, P, "antichain")
    conv = lambda e: {k: str(as_number(parse_coefficient(v))) for k, v in e.to_json().items()}
    payload = {"q": list(q), "recursive": conv(r1), "antichain": conv(r2), "match": r1 == r2}
    return emit(args, payload, r1 == r2, f"{len(r1)} terms, match={r1 == r2}")


def rep_report(w, params: RepParams, model, N: int, points: int, seed: int) -> tuple[dict, bool]:
    x = np.sort(np.random.default_rng(seed).uniform(0, 2 * math.pi, points))
    f = suite.test_function()
    a = apply_wq_closed(w, f, params, model)(x, False)
    b = apply_wq_composed(w, f, params, model)(x, False)
    d = np.abs(a - b)
    skipped = int(np.count_nonzero(np.isnan(d)))
    closed = float(np.nanmax(d)) if skipped < d.size else 0.0
    quad = 0.0
    for s in sorted(set(w.word)) or [0]:
        sf = apply_sq(s, f, params, model)
        r = np.abs(apply_sq(s, sf, params, model)(x, False) - ((params.q[s] - 1) * sf(x, False) + params.q[s] * f(x, False)))
        quad = max(quad, float(np.nanmax(r)))
    grid = BoundaryGrid(N)
    g = PointFunction.from_callable(lambda t: np.exp(np.cos(t)) + 1j * np.sin(3 * t))
    n0 = GridFunction.sample(g, grid).norm()
    unit = abs(GridFunction.sample(apply_w1(w, g, model, params.eps), grid).norm() - n0) / n0
    rep = {
        "w": str(w),
        "q": list(params.q),
        "eps": params.eps,
        "N": N,
        "points": points,
        "skipped_points": skipped,
        "closed_vs_composed": closed,
        "quadratic_relation": quad,
        "unitarity_q1_relative": unit,
    }
    ok = closed <= 1e-9 and quad <= 1e-9 and unit <= 10 / N
    if params.eps == 0:
        herm = max(hermitian_residual(operator_matrix(model.system.gen(s), params, grid, model)) for s in sorted(set(w.word)) or [0])
        rep["hermitian_residual"] = herm
        ok &= herm <= 10 / N
    return rep, bool(ok)


def cmd_rep_check(args) -> int:
    cfg = resolve(args)
    S = _system(cfg)
    model = build_polygon(cfg["k"], S)
    params = rep_params(cfg)
    rep, ok = rep_report(S.parse(args.w), params, model, cfg.get("N", 4096), cfg.get("points", 256), cfg.get("seed", 0))
    return emit(args, rep, ok, f"closed vs composed {rep['closed_vs_composed']:.2e}")


def cmd_estimates_sweep(args) -> int:
    cfg = resolve(args)
    S = _system(cfg)
    model = build_polygon(cfg["k"], S)
    params = rep_params(cfg)
    if params.eps != 0:
        raise ConfigError("eps must be 0 for the estimates")
    report = estimates.sweep(cfg.get("lmax", 8), params, cfg.get("samples", 64), cfg.get("seed", 0), model)
    fails = report.failures()
    payload = {
        "summary": report.aggregates,
        "failures": report.failure_counts(),
        "checked": report.checked_counts(),
    }
    return emit(args, payload, not fails, f"{len(report.rows)} rows, {len(fails)} failing; C = {report.aggregates['C']:.4g}", report.to_csv())


def _arcs(cfg) -> dict:
    if "arcs" not in cfg:
        return suite.DEFAULT_ARCS
    data = json.loads(Path(cfg["arcs"]).read_text())
    for key in ("U", "V", "W"):
        if key not in data:
            raise ConfigError(f"arcs file lacks {key!r}")
    return data


def averaging_table(res: averaging.ExperimentResult) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "q", "W", "layer", "in_U", "value", "target", "error"])
    for r in res.rows:
        wr.writerow([r["t"], r["q"], r["W"], r["layer"], r["in_U"], f"{r['value']:.15g}", f"{r['target']:.15g}", f"{r['error']:.15g}"])
    return buf.getvalue()


def cmd_averaging_run(args) -> int:
    # here q lists uniform parameters to compare, not one value per generator
    qtext = args.q if args.q is not None else read_config(args.config).get("q", "1,2")
    args.q = None
    cfg = resolve(args)
    try:
        qs = sorted({float(Fraction(x.strip())) for x in qtext.split(",")})
    except ValueError as e:
        raise ConfigError(f"invalid value for q: {qtext!r}") from e
    if any(x < 1 for x in qs):
        raise ConfigError("q entries must be >= 1 for analytic subcommands")
    S = _system(cfg)
    model = build_polygon(cfg["k"], S)
    t = cfg.get("t", (4.0, 6.0, 8.0, 10.0))
    scfg = replace(suite.SuiteConfig(), t=t, mesh=cfg.get("mesh", 12))
    res, Rinfo = suite.run_averaging(model, scfg, _arcs(cfg), qs)
    check = suite.check_averaging(res, min(t), max(t))
    payload = {"R": Rinfo, "rows": res.rows, "summary": res.summary, "trend": check.metrics["trend"]}
    return emit(args, payload, check.passed, f"{len(res.rows)} rows, trend {'ok' if check.passed else 'not met'}", averaging_table(res))


def cmd_suite_all(args) -> int:
    cfg = resolve(args)
    base = suite.SuiteConfig.light() if cfg.get("profile", "full") == "light" else suite.SuiteConfig()
    over = {}
    for key, field_ in (("k", "k"), ("seed", "seed"), ("N", "N"), ("samples", "samples"), ("mesh", "mesh"), ("t", "t")):
        if key in cfg:
            over[field_] = cfg[key]
    if "q" in cfg:
        over["q"] = cfg["q"]
    if "lmax" in cfg:
        over.update(hecke_lmax=cfg["lmax"], rep_lmax=cfg["lmax"])
    scfg = replace(base, **over)
    checks = suite.run_all(scfg)
    ok = all(c.passed for c in checks)
    payload = {"config": scfg.as_dict(), "checks": [{"name": c.name, "passed": c.passed, "metrics": c.metrics} for c in checks]}
    for c in checks:
        print(c.line(), file=sys.stderr)
    return emit(args, payload, ok, f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")


# -- parser ------------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, keys=("k", "q", "eps", "N", "lmax", "samples", "seed")):
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--out", help="write JSON here instead of stdout")
    for key in keys:
        conv, help_ = KEYS[key]
        p.add_argument(f"--{key}", type=str if conv is str else conv, default=None, help=help_)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rahecke", description="Hecke operators for right-angled polygon groups")
    top = ap.add_subparsers(dest="group", required=True)

    g = top.add_parser("group").add_subparsers(dest="action", required=True)
    p = g.add_parser("info")
    _common(p, ("k", "lmax"))
    p.set_defaults(func=cmd_group_info)
    p = g.add_parser("ball")
    _common(p, ("k",))
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--geometry", action="store_true", help="add chamber centers and wall arcs")
    p.set_defaults(func=cmd_group_ball)

    g = top.add_parser("walls").add_subparsers(dest="action", required=True)
    p = g.add_parser("dump")
    _common(p, ("k",))
    p.add_argument("--w", required=True)
    p.set_defaults(func=cmd_walls_dump)

    g = top.add_parser("hecke").add_subparsers(dest="action", required=True)
    p = g.add_parser("mul")
    _common(p, ("k", "q"))
    p.add_argument("--w", help="left factor as a single basis element")
    p.add_argument("--a", help="left factor: JSON {word: coefficient} or a file")
    p.add_argument("--f", required=True, help="right factor: JSON {word: coefficient} or a file")
    p.set_defaults(func=cmd_hecke_mul)

    g = top.add_parser("rep").add_subparsers(dest="action", required=True)
    p = g.add_parser("check")
    _common(p, ("k", "q", "eps", "N", "points", "seed"))
    p.add_argument("--w", required=True)
    p.set_defaults(func=cmd_rep_check)

    g = top.add_parser("estimates").add_subparsers(dest="action", required=True)
    p = g.add_parser("sweep")
    _common(p, ("k", "q", "eps", "lmax", "samples", "seed"))
    p.add_argument("--csv", help="write report rows here")
    p.set_defaults(func=cmd_estimates_sweep)

    g = top.add_parser("averaging").add_subparsers(dest="action", required=True)
    p = g.add_parser("run")
    _common(p, ("k", "q", "t", "arcs", "mesh"))
    p.add_argument("--csv", help="write the table here")
    p.set_defaults(func=cmd_averaging_run)

    g = top.add_parser("suite").add_subparsers(dest="action", required=True)
    p = g.add_parser("all")
    _common(p, ("k", "q", "N", "lmax", "samples", "seed", "t", "mesh", "profile"))
    p.set_defaults(func=cmd_suite_all)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "func", None) is cmd_hecke_mul and args.w is None and args.a is None:
        ap.error("hecke mul needs --w or --a")
    try:
        return args.func(args)
    except (ConfigError, CoxeterError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
