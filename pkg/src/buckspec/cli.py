"""Command-line entry point: ``buckspec {solve,verify,bound,sweep}``.

Exit status: 0 success, 1 an asserted inequality failed, 2 any error (an
error record ``{"error": CODE, "message": ...}`` is printed to stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .core import DomainKind, DomainSpec, ProblemSpec, RuleId, RuleParams, Spectrum
from .errors import BuckspecError, RuleError, ValidationError
from .inequalities import (
    DeltaPolicy,
    bound_from_rule,
    default_rules,
    verify_spectrum,
)
from .io import (
    atomic_write,
    cache_key,
    csv_bytes,
    default_cache_dir,
    dumps,
    load_spectrum_file,
    plot_data_bytes,
    spectrum_document,
    spectrum_from_document,
)
from .solver import SolveConfig, compute_spectrum, refine_until

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def parse_length(tok: str) -> float:
    tok = tok.strip()
    if tok.endswith("pi"):
        coef = tok[:-2].rstrip("*")
        return (float(coef) if coef else 1.0) * math.pi
    return float(tok)


def parse_domain(text: str) -> DomainSpec:
    """``interval:1``, ``rectangle:2x1`` (or ``2,1``), ``cylinder:2pi,1``."""
    try:
        kind, _, rest = text.partition(":")
        parts = rest.replace("x", ",").split(",") if rest else []
        return DomainSpec(DomainKind(kind.strip().lower()), tuple(parse_length(p) for p in parts))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("BAD_DOMAIN", f"cannot parse domain {text!r}") from exc


def parse_rules(text: str | None, problem: ProblemSpec | None) -> list[RuleId]:
    if not text:
        if problem is None:
            raise ValidationError("NO_RULES", "--rules is required for synthetic spectra")
        return [r for r in default_rules(problem)]
    try:
        return [RuleId(r.strip().lower().replace("_", "-")) for r in text.split(",") if r.strip()]
    except ValueError as exc:
        raise ValidationError("UNKNOWN_RULE", str(exc)) from exc


def parse_axis(text: str) -> list[str]:
    if ":" in text:
        start, stop, *step = text.split(":")
        step = int(step[0]) if step else 1
        return [str(v) for v in range(int(start), int(stop) + 1, step)]
    return [t.strip() for t in text.split(",") if t.strip()]


# -- spectrum production --------------------------------------------------------


def _problem(args, order=None, domain=None) -> ProblemSpec:
    order = args.l if order is None else order
    if domain is None and args.domain is not None:
        domain = parse_domain(args.domain)
    if order is None or domain is None:
        raise ValidationError("MISSING_PROBLEM", "need --l and --domain (or --spectrum)")
    return ProblemSpec(order, args.kind, domain)


def _solver_settings(args, degree=None) -> dict:
    return {
        "k": args.k,
        "degree": args.degree if degree is None else degree,
        "rel_tol": args.rel_tol,
        "max_degree": args.max_degree,
        "mode_cutoff": args.mode_cutoff,
    }


def _solve(problem: ProblemSpec, settings: dict) -> Spectrum:
    if settings["rel_tol"] is not None:
        return refine_until(problem, settings["k"], settings["rel_tol"], settings["max_degree"],
                            mode_cutoff=settings["mode_cutoff"])
    return compute_spectrum(problem, SolveConfig(k=settings["k"], degree=settings["degree"],
                                                 mode_cutoff=settings["mode_cutoff"]))


def spectrum_bytes(problem: ProblemSpec, settings: dict, cache_dir: Path | None) -> bytes:
    """Spectrum document bytes, served from the cache when present."""
    key = cache_key(problem, settings, __version__)
    if cache_dir is not None:
        hit = cache_dir / f"{key}.json"
        if hit.exists():
            return hit.read_bytes()
    data = dumps(spectrum_document(_solve(problem, settings)))
    if cache_dir is not None:
        atomic_write(cache_dir / f"{key}.json", data)
    return data


def _cache_dir(args) -> Path | None:
    if args.no_cache:
        return None
    return Path(args.cache_dir) if args.cache_dir else default_cache_dir()


def _spectrum_source(args):
    """(problem or None, values) from ``--spectrum`` or from solving the flags."""
    if args.spectrum:
        problem, values, _ = load_spectrum_file(args.spectrum)
        return problem, values
    problem = _problem(args)
    doc = json.loads(spectrum_bytes(problem, _solver_settings(args), _cache_dir(args)))
    return problem, list(spectrum_from_document(doc).values)


def _params(args, problem: ProblemSpec | None) -> RuleParams:
    order = problem.order if problem is not None else (args.l or 2)
    n = args.n
    if n is None and problem is not None and problem.domain.kind is DomainKind.RECTANGLE:
        n = 2
    seq = tuple(float(x) for x in args.delta_seq.split(",")) if args.delta_seq else None
    return RuleParams(order=order, n=n, delta=args.delta, delta_seq=seq)


def _emit(data: bytes, path: str | None):
    if path and path != "-":
        atomic_write(path, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# -- subcommands ------------------------------------------------------------------


def cmd_solve(args) -> int:
    problem = _problem(args)
    _emit(spectrum_bytes(problem, _solver_settings(args), _cache_dir(args)), args.out)
    return EXIT_OK


def _verify_reports(problem, values, args):
    rules = parse_rules(args.rules, problem)
    params = _params(args, problem)
    source = values
    if problem is not None:
        source = Spectrum(problem, tuple(values), tuple([math.inf] * len(values)))
    return verify_spectrum(source, rules, args.k_max, params), rules


def cmd_verify(args) -> int:
    problem, values = _spectrum_source(args)
    reports, rules = _verify_reports(problem, values, args)
    rows = [(r.rule.value, r.k, r.lhs, r.rhs, r.slack, str(r.holds).lower()) for r in reports]
    summary = {"k_max": args.k_max, "rules": {}}
    for rule in rules:
        mine = [r for r in reports if r.rule is rule]
        summary["rules"][rule.value] = {
            "min_slack": min(r.slack for r in mine),
            "all_hold": all(r.holds for r in mine),
            "conjecture": rule is RuleId.CY_CONJECTURE,
        }
    ok = all(r.holds for r in reports if not r.conjecture)
    summary["all_hold"] = ok
    _emit(csv_bytes(["rule", "k", "lhs", "rhs", "slack", "holds"], rows), args.csv)
    _emit(dumps(summary), args.summary)
    return EXIT_OK if ok else EXIT_FAIL


def _bound_rows(problem, values, args):
    rules = parse_rules(args.rules, problem)
    params = _params(args, problem)
    if len(values) < args.k_max + 1:
        raise ValidationError("INSUFFICIENT_VALUES", f"need {args.k_max + 1} values, have {len(values)}")
    policy = DeltaPolicy.FIXED if args.delta_seq else DeltaPolicy.OPTIMIZE_UNIFORM
    rows = []
    for k in range(1, args.k_max + 1):
        computed = float(values[k])
        for rule in rules:
            try:
                res = bound_from_rule(rule, params, values[:k], policy, problem=problem)
                bound, method = res.bound, res.method.value
            except RuleError as exc:
                if exc.code != "UNBOUNDED_FOR_DELTA":
                    raise
                bound, method = math.inf, "unbounded"
            rows.append((k, computed, rule.value, bound, bound / computed, method))
    return rows


def cmd_bound(args) -> int:
    problem, values = _spectrum_source(args)
    rows = _bound_rows(problem, values, args)
    _emit(csv_bytes(["k", "computed", "rule", "bound", "ratio", "method"], rows), args.csv)
    return EXIT_OK


def _sweep_member(args, axis, value):
    order, domain, degree = None, None, None
    if axis == "degree":
        degree = int(value)
    elif axis == "l":
        order = int(value)
    elif axis == "aspect":
        domain = DomainSpec(DomainKind.RECTANGLE, (float(value), 1.0))
    problem = _problem(args, order=order, domain=domain)
    settings = _solver_settings(args, degree)
    if args.quantity != "eigenvalue":
        settings["k"] = max(settings["k"], args.k_max + 1)
    doc = json.loads(spectrum_bytes(problem, settings, _cache_dir(args)))
    values = list(spectrum_from_document(doc).values)
    if args.quantity == "eigenvalue":
        return [(f"k={k}", k, float(v)) for k, v in enumerate(values, start=1)]
    if args.quantity == "slack":
        reports, _ = _verify_reports(problem, values, args)
        return [(f"{r.rule.value} {axis}={value}", r.k, float(r.slack)) for r in reports]
    return [(f"{row[2]} {axis}={value}", row[0], float(row[4])) for row in _bound_rows(problem, values, args)]


def cmd_sweep(args) -> int:
    axis_values = parse_axis(args.values) if args.values else []
    if not args.axis or not axis_values:
        raise ValidationError("NO_AXIS", "sweep needs --axis and a non-empty --values")
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda v: _sweep_member(args, args.axis, v), axis_values))
    rows = []
    series: dict[str, list] = {}
    for value, member in zip(axis_values, results):
        for name, k, y in member:
            rows.append((args.axis, value, name, k, y))
            if args.quantity == "eigenvalue":
                series.setdefault(name, []).append((value, y))
            else:
                series.setdefault(name, []).append((k, y))
    _emit(csv_bytes(["axis", "axis_value", "series", "k", "value"], rows), args.csv)
    if args.dat:
        atomic_write(args.dat, plot_data_bytes(series.items()))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="buckspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"buckspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--l", type=int, help="polyharmonic order l >= 2")
    common.add_argument("--kind", default="buckling", choices=["buckling", "clamped"])
    common.add_argument("--domain", help="interval:H | rectangle:AxB | cylinder:L,H")
    common.add_argument("--k", type=int, default=6, help="number of eigenvalues to compute")
    common.add_argument("--degree", type=int, default=16, help="basis functions per dimension")
    common.add_argument("--rel-tol", type=float, help="refine until the k-th value moves less than this")
    common.add_argument("--max-degree", type=int, default=32)
    common.add_argument("--mode-cutoff", type=int, help="largest Fourier mode on a cylinder")
    common.add_argument("--cache-dir", help="cache directory (default $BUCKSPEC_CACHE)")
    common.add_argument("--no-cache", action="store_true")

    rules = argparse.ArgumentParser(add_help=False)
    rules.add_argument("--spectrum", help="spectrum JSON file instead of solving")
    rules.add_argument("--rules", help="comma list: cy-euclid,sphere,cy-improved,cy-conjecture,thm11,cor12,thm31")
    rules.add_argument("--k-max", type=int, default=3)
    rules.add_argument("--n", type=int, help="dimension for the Euclidean/sphere rules")
    rules.add_argument("--delta", type=float, help="sphere-rule delta")
    rules.add_argument("--delta-seq", help="comma list of non-increasing positive deltas")
    rules.add_argument("--csv", help="CSV output path (default stdout)")

    p = sub.add_parser("solve", parents=[common], help="compute a spectrum")
    p.add_argument("--out", help="spectrum JSON path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common, rules], help="check inequalities on a spectrum")
    p.add_argument("--summary", help="JSON summary path (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bound", parents=[common, rules], help="tabulate extracted upper bounds")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", parents=[common, rules], help="convergence / comparison datasets")
    p.add_argument("--axis", choices=["degree", "l", "aspect"])
    p.add_argument("--values", help="start:stop:step or comma list")
    p.add_argument("--quantity", default="eigenvalue", choices=["eigenvalue", "slack", "ratio"])
    p.add_argument("--dat", help="plot-ready data file")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def error_record(code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "message": message}, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BuckspecError as exc:
        error_record(exc.code, exc.message)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
