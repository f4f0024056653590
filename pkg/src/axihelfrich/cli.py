"""Command-line front end: ``evaluate``, ``minimize``, ``verify`` and ``shapes``.

Exit codes: 0 ok, 1 a verified bound failed, 2 unreadable input, 3 invalid
input, 4 infeasible constraints, 5 the optimizer did not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from . import bounds, geometry, io, shapes
from .curve import G0, G1, GENERALIZED, SurfaceSystem, split_at_axis, validate
from .energy import MaterialParams, coercivity_check, system_energy
from .errors import (
    AxiHelfrichError,
    CoercivityRangeError,
    CurveParseError,
    InfeasibleConstraintError,
    SeedingError,
)

log = logging.getLogger("axihelfrich")

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_NONCONVERGED = range(6)

SUITES = ("gauss-bonnet", "coercivity", "length", "system-length", "axis-tangent", "oscillation", "cardinality")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# --- configuration ------------------------------------------------------------

def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}", EXIT_PARSE)
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}", EXIT_PARSE) from None
    if not isinstance(cfg, dict):
        raise CliError(f"{p}: top level must be a JSON object", EXIT_PARSE)
    return cfg


def _number(value, name, positive=False, nonnegative=False) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise CliError(f"{name} must be a number, got {value!r}", EXIT_VALIDATION) from None
    if not math.isfinite(x):
        raise CliError(f"{name} must be finite", EXIT_VALIDATION)
    if positive and not x > 0.0:
        raise CliError(f"{name} must be positive, got {x!r}", EXIT_VALIDATION)
    if nonnegative and x < 0.0:
        raise CliError(f"{name} must be nonnegative, got {x!r}", EXIT_VALIDATION)
    return x


def _params(args, cfg) -> MaterialParams:
    p = dict(cfg.get("params", {}))
    for key, attr in (("kappa_H", "kappa_H"), ("kappa_G", "kappa_G"), ("H0", "H0")):
        val = getattr(args, attr, None)
        if val is not None:
            p[key] = val
    kH = _number(p.get("kappa_H", 1.0), "kappa_H", positive=True)
    kG = _number(p.get("kappa_G", -1.0), "kappa_G")
    H0 = _number(p.get("H0", 0.0), "H0")
    return MaterialParams(kH, kG, H0)


def _resolve_curve_path(spec: str) -> Path:
    if spec.startswith("@"):
        name = spec[1:]
        ref = resources.files("axihelfrich") / "data" / f"{name}.csv"
        if not ref.is_file():
            raise CliError(f"no bundled fixture named {name!r}", EXIT_PARSE)
        return Path(str(ref))
    p = Path(spec)
    if not p.exists():
        raise CliError(f"curve file not found: {p}", EXIT_PARSE)
    return p


def _read_curve(spec: str):
    path = _resolve_curve_path(spec)
    try:
        return io.read_curve(path)
    except CurveParseError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{io.sidecar_path(path)}: line {exc.lineno}, column {exc.colno}: {exc.msg}", EXIT_PARSE) from None


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- evaluate ----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    spec = args.curve or cfg.get("curve")
    if not spec:
        raise CliError("evaluate needs a curve file (positional argument or 'curve' in the config)", EXIT_PARSE)
    curve = _read_curve(spec)
    params = _params(args, cfg)
    try:
        report = validate(curve)
    except AxiHelfrichError as exc:
        raise CliError(f"invalid curve: {exc}", EXIT_VALIDATION) from None
    if not report.ok:
        raise CliError(f"invalid curve: violated invariant(s) {', '.join(report.violations)}", EXIT_VALIDATION)

    pieces = split_at_axis(curve) if report.curve_class == GENERALIZED else [curve]
    canon, flipped = [], []
    for p in pieces:
        c, f = geometry.canonicalize_orientation(p)
        canon.append(c)
        flipped.append(f)
    energy_report = system_energy(SurfaceSystem(canon), params, check_disjointness=False)
    energy_report.flipped = flipped
    payload = {"curve": curve.name, "class": report.curve_class, **energy_report.to_dict()}
    if report.curve_class in (G0, G1):
        gb = geometry.gauss_bonnet_check(canon[0])
        payload["gauss_bonnet"] = {"integral": gb.integral, "expected": gb.expected, "defect": gb.defect}

    out = _out_dir(args)
    stem = Path(curve.name or "curve").name
    io.write_json(payload, out / f"{stem}.report.json")
    table_curve = curve if report.curve_class == GENERALIZED else canon[0]
    io.write_geometry(table_curve, out / f"{stem}.geometry.csv")
    if args.plot:
        io.write_svg(canon, out / f"{stem}.svg")
    print(io.dumps(payload, indent=2))
    return EXIT_OK


# --- minimize ------------------------------------------------------------------

def _opt_config(args, cfg):
    from .optimizer import OptConfig

    fields = dict(cfg.get("optimizer", {}))
    if args.seed is not None:
        fields["seed"] = args.seed
    if getattr(args, "N", None) is not None:
        fields["N"] = args.N
    if getattr(args, "max_outer_iterations", None) is not None:
        fields["max_outer_iterations"] = args.max_outer_iterations
    known = OptConfig.__dataclass_fields__
    unknown = sorted(set(fields) - set(known))
    if unknown:
        raise CliError(f"unknown optimizer setting(s): {', '.join(unknown)}", EXIT_VALIDATION)
    try:
        return OptConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid optimizer settings: {exc}", EXIT_VALIDATION) from None


def cmd_minimize(args) -> int:
    from .optimizer import ConstraintSpec, MultistartError, OptProblem, minimize, multistart

    cfg = _load_config(args.config)
    params = _params(args, cfg)
    cons_cfg = dict(cfg.get("constraints", {}))
    if args.area is not None:
        cons_cfg["area"] = args.area
    if args.volume is not None:
        cons_cfg["volume"] = args.volume
    if "area" not in cons_cfg or "volume" not in cons_cfg:
        raise CliError("minimize needs constraints.area and constraints.volume", EXIT_VALIDATION)
    area = _number(cons_cfg["area"], "constraints.area", positive=True)
    volume = _number(cons_cfg["volume"], "constraints.volume", nonnegative=True)
    tol = _number(cons_cfg.get("tolerance", 1e-6), "constraints.tolerance", positive=True)
    try:
        cons = ConstraintSpec(area, volume, tol)
    except InfeasibleConstraintError as exc:
        raise CliError(f"infeasible constraints: {exc}", EXIT_INFEASIBLE) from None
    config = _opt_config(args, cfg)

    out = _out_dir(args)
    default = "sphere" if shapes.reduced_volume(area, volume) > 1.0 - 1e-9 else "prolate"
    kinds = args.kind or cfg.get("kinds") or cfg.get("kind") or default
    if isinstance(kinds, str):
        kinds = [kinds]
    initial = cfg.get("initial")
    try:
        if initial:
            curves = [_read_curve(p) for p in initial]
            result = minimize(OptProblem(curves, params, cons), config)
            leaderboard = None
        elif len(kinds) == 1:
            curves = shapes.seed_shape(kinds[0], area, volume, config.N)
            result = minimize(OptProblem(list(curves), params, cons), config)
            result.kind = kinds[0]
            leaderboard = None
        else:
            ms = multistart(params, cons, kinds, config, threads=args.threads or 1)
            result, leaderboard = ms.best, ms.leaderboard
    except (InfeasibleConstraintError, SeedingError) as exc:
        raise CliError(f"infeasible: {exc}", EXIT_INFEASIBLE) from None
    except MultistartError as exc:
        io.write_json({"failures": exc.failures}, out / "trace.json")
        raise CliError(f"{exc} (trace: {out / 'trace.json'})", EXIT_NONCONVERGED) from None
    except (AxiHelfrichError, ValueError) as exc:
        raise CliError(str(exc), EXIT_VALIDATION) from None

    payload = result.to_dict()
    trace = payload.pop("trace")
    if leaderboard is not None:
        payload["leaderboard"] = leaderboard
    io.write_json(payload, out / "result.json")
    io.write_json(trace, out / "trace.json")
    for i, c in enumerate(result.system):
        io.write_curve(c, out / f"curve_{i}.csv")
    if args.plot:
        io.write_svg(list(result.system), out / "profile.svg")
    print(io.dumps({k: payload[k] for k in ("kind", "converged", "reason", "residuals")}, indent=2))
    if not result.converged:
        print(f"optimizer did not converge: {result.reason}; trace written to {out / 'trace.json'}", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


# --- verify --------------------------------------------------------------------

def _fixtures():
    return [
        shapes.sphere(512),
        shapes.torus(512),
        shapes.spheroid(512, 1.0, 2.0).with_name("prolate"),
        shapes.spheroid(512, 2.0, 1.0).with_name("oblate"),
    ]


def _curve_reports(curve, suites, params, sharpness: bool):
    out = []
    if "gauss-bonnet" in suites:
        gb = geometry.gauss_bonnet_check(curve)
        out.append(bounds.BoundReport("gauss-bonnet", gb.defect, 1e-4 * 4.0 * math.pi, "<=", f"integral={gb.integral!r}"))
    if "coercivity" in suites:
        r = coercivity_check(curve, params)
        out.append(bounds.BoundReport("coercivity", r.lhs, r.rhs, "<=", f"C={r.C!r}"))
    if "length" in suites:
        out.extend(bounds.length_bound_check(curve))
    if "system-length" in suites:
        out.append(bounds.system_length_bound_check([curve]))
    if "axis-tangent" in suites and not curve.closed:
        t = bounds.axis_tangent_check(curve)
        worst = max(
            abs(t.limit_dz_start),
            abs(t.limit_dz_end),
            abs(abs(t.limit_dx_start) - t.length),
            abs(abs(t.limit_dx_end) - t.length),
        )
        if not t.dx_signs:
            worst = math.inf
        out.append(bounds.BoundReport("axis-tangent", worst, t.tolerance, "<=", "max deviation of the tangent limits"))
    if "oscillation" in suites:
        o1, o2 = bounds.oscillation_bound_check(curve, 0.0, 1.0)
        out += [o1, o2]
        if not curve.closed:
            o1, o2 = bounds.oscillation_bound_check(curve, 0.25, 0.75)
            out += [o1, o2]
        if sharpness:
            o1, _ = bounds.oscillation_bound_check(curve, 0.0, 1.0)
            out.append(bounds.BoundReport("oscillation-sharpness", o1.relative_slack, 1e-3, "<=", "equality witness"))
    if "cardinality" in suites:
        out.append(bounds.cardinality_check(curve))
        out.append(bounds.system_cardinality_check([curve]))
    return out


def run_verify(suites, count: int, seed: int, params: MaterialParams, threads: int = 1):
    """All bound reports for the fixtures plus ``count`` random curves, in a fixed order."""
    curves = _fixtures() + shapes.random_curves(count, seed=seed, n=256)
    jobs = [(c, c.name == "sphere") for c in curves]

    def work(job):
        c, sharp = job
        return [(c.name, r) for r in _curve_reports(c, suites, params, sharp)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, jobs))
    else:
        chunks = [work(j) for j in jobs]
    return [item for chunk in chunks for item in chunk]


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    vcfg = dict(cfg.get("verify", {}))
    suites = args.suite or vcfg.get("suites") or list(SUITES)
    bad = sorted(set(suites) - set(SUITES))
    if bad:
        raise CliError(f"unknown suite(s): {', '.join(bad)}; choose from {', '.join(SUITES)}", EXIT_VALIDATION)
    count = int(args.count if args.count is not None else vcfg.get("count", 100))
    if count < 0:
        raise CliError("count must be nonnegative", EXIT_VALIDATION)
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    params = _params(args, cfg)
    try:
        params.require_coercive()
    except CoercivityRangeError as exc:
        if "coercivity" in suites:
            raise CliError(str(exc), EXIT_VALIDATION) from None

    results = run_verify(suites, count, seed, params, args.threads or (os.cpu_count() or 1))
    lines = [io.dumps({"curve": name, **r.to_dict()}) for name, r in results]
    text = "\n".join(lines) + "\n"
    if args.out:
        (_out_dir(args) / "verify.jsonl").write_text(text, encoding="utf-8", newline="\n")
    sys.stdout.write(text)
    failures = [(name, r) for name, r in results if not r.holds]
    if failures:
        for name, r in failures:
            print(f"FAILED {r.name} on {name}: lhs={r.lhs!r} rhs={r.rhs!r}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# --- shapes ------------------------------------------------------------------------

def cmd_shapes(args) -> int:
    area = _number(args.area, "area", positive=True)
    volume = _number(args.volume, "volume", nonnegative=True)
    try:
        curves = shapes.seed_shape(args.kind, area, volume, args.n)
    except (InfeasibleConstraintError, SeedingError) as exc:
        raise CliError(f"infeasible: {exc}", EXIT_INFEASIBLE) from None
    out = _out_dir(args)
    base = args.kind.replace("(", "_").replace(")", "").replace(":", "_")
    written = []
    for i, c in enumerate(curves):
        name = f"{base}.csv" if len(curves) == 1 else f"{base}_{i}.csv"
        written.append(str(io.write_curve(c.with_name(base if len(curves) == 1 else f"{base}_{i}"), out / name)))
    if args.plot:
        io.write_svg(curves, out / f"{base}.svg")
    print("\n".join(written))
    return EXIT_OK


# --- parser ------------------------------------------------------------------------

def _float_expr(text: str) -> float:
    """Accept plain numbers and simple expressions in ``pi`` such as ``4*pi/3``."""
    try:
        return float(text)
    except ValueError:
        pass
    allowed = set("0123456789.+-*/() epi")
    if not set(text) <= allowed:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    try:
        value = eval(text, {"__builtins__": {}}, {"pi": math.pi})  # noqa: S307 - restricted alphabet
    except Exception:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return float(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON configuration file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: current)")
    common.add_argument("--plot", action="store_true", default=argparse.SUPPRESS, help="also write an SVG profile")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    material = argparse.ArgumentParser(add_help=False)
    material.add_argument("--kappa-H", dest="kappa_H", type=float)
    material.add_argument("--kappa-G", dest="kappa_G", type=float)
    material.add_argument("--H0", dest="H0", type=float)

    parser = argparse.ArgumentParser(prog="axihelfrich", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--plot", action="store_true", default=False)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("-v", "--verbose", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", parents=[common, material], help="energy report of a curve file")
    ev.add_argument("curve", nargs="?", help="curve CSV, or @sphere / @torus for a bundled fixture")
    ev.set_defaults(func=cmd_evaluate)

    mn = sub.add_parser("minimize", parents=[common, material], help="constrained energy minimization")
    mn.add_argument("--area", type=_float_expr)
    mn.add_argument("--volume", type=_float_expr)
    mn.add_argument("--kind", action="append", help="seed family (repeat for a multistart)")
    mn.add_argument("--N", type=int)
    mn.add_argument("--max-outer-iterations", dest="max_outer_iterations", type=int)
    mn.set_defaults(func=cmd_minimize)

    vf = sub.add_parser("verify", parents=[common, material], help="numerical checks of the bounds")
    vf.add_argument("--suite", action="append", choices=SUITES)
    vf.add_argument("--count", type=int)
    vf.set_defaults(func=cmd_verify)

    sh = sub.add_parser("shapes", parents=[common], help="write a seed-shape curve file")
    sh.add_argument("kind")
    sh.add_argument("area", type=_float_expr)
    sh.add_argument("volume", type=_float_expr)
    sh.add_argument("--n", type=int, default=512, help="nodes per curve")
    sh.set_defaults(func=cmd_shapes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
