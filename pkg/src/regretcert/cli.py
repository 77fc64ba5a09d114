"""Command-line entry point: analyze, verify, lowerbound, zoo.

Outputs are byte-deterministic for a fixed (input, flags, seed): JSON is
dumped with sorted keys, reports carry no timestamps, and every random
stream is seeded explicitly.

Exit codes: 0 ok, 2 input error, 3 inconsistent, 4 transfer violation,
5 exponent window miss, 6 nonconvergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from . import __version__
from .constants import (
    ConsistencyError,
    check_consistency,
    certificate_to_document,
)
from .elicitation import (
    AtlasConstructionError,
    bayes_risk_target,
    cell_decomposition,
    expected_loss,
    level_set_atlas,
)
from .loss_model import (
    PolyhedralLink,
    ProblemFormatError,
    link_eval,
    parse_problem,
    serialize_problem,
)
from .polyhedra import UnsupportedScaleError
from .lower_bound import (
    NonConvergenceError,
    SweepConfigError,
    analytic_envelope,
    check_envelope,
    fit_exponents,
    geometric_grid,
    measure_gradient_lipschitz,
    sweep_lambda,
    SweepConfig,
)
from .rational import format_rational, is_rational_literal, parse_rational, rat
from .verifier import (
    certificate_witness_pairs,
    verify_conditional,
    verify_distributional_batches,
)
from .zoo import ZooLookupError, builtin, catalog_names

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INCONSISTENT = 3
EXIT_VIOLATION = 4
EXIT_EXPONENT = 5
EXIT_NONCONVERGENCE = 6

SCHEMA_VERSION = 1

SMOOTH_SLOPE_WINDOWS = {"surrogate": (1.9, 2.1), "target": (0.99, 1.01)}
CONTROL_SLOPE_WINDOW = (0.95, 1.05)


class InputError(Exception):
    pass


def _load_entry(spec: str):
    """A problem path or zoo://name; returns (entry_or_None, problem)."""
    if spec.startswith("zoo://"):
        name = spec[len("zoo://") :]
        try:
            entry = builtin(name)
        except ZooLookupError as exc:
            raise InputError(str(exc)) from None
        return entry, entry.problem
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read problem file: {exc}") from None
    try:
        return None, parse_problem(text)
    except ProblemFormatError as exc:
        raise InputError(str(exc)) from None


def _flip_link(problem):
    """Debug aid: reverse the cell-to-report assignment of the link."""
    cells = problem.link.cells
    reports = [cell.report for cell in cells][::-1]
    flipped = tuple(
        type(cell)(region=cell.region, report=rep) for cell, rep in zip(cells, reports)
    )
    link = PolyhedralLink(cells=flipped, fallback_report=problem.link.fallback_report)
    return type(problem)(
        labels=problem.labels,
        target=problem.target,
        surrogate=problem.surrogate,
        link=link,
    )


def _fmt_point(point):
    return [format_rational(v) for v in point]


def _problem_summary(problem):
    digest = hashlib.sha256(serialize_problem(problem).encode("utf-8")).hexdigest()
    return {
        "digest": digest,
        "labels": list(problem.labels.labels),
        "reports": list(problem.target.reports),
        "surrogate_dim": problem.surrogate.dim,
    }


def _atlas_summary(atlas):
    return {
        "num_representatives": len(atlas.level_sets),
        "num_vertices": len(atlas.vertex_pool),
        "representatives": [_fmt_point(u) for u in atlas.representatives],
        "vertex_pool": [_fmt_point(q.probs) for q in atlas.vertex_pool],
        "level_sets": [
            {
                "representative": _fmt_point(ls.representative),
                "vertices": [_fmt_point(q.probs) for q in ls.vertex_points],
                "full_dimensional": ls.full_dimensional,
            }
            for ls in atlas.level_sets
        ],
    }


def _cells_summary(cells):
    return [
        {
            "interior": _fmt_point(cell.interior.probs),
            "target_optimal": list(cell.target_optimal_set),
            "vertices": [_fmt_point(q.probs) for q in cell.region_vertices],
        }
        for cell in cells
    ]


def _analysis_pipeline(problem, threads):
    atlas = level_set_atlas(problem.surrogate)
    cells = cell_decomposition(problem.surrogate, problem.target, atlas)
    certificate = check_consistency(problem, atlas, cells, threads=threads)
    return atlas, cells, certificate


def _emit(doc, out_path):
    text = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    _, problem = _load_entry(args.problem)
    if args.flip_link:
        problem = _flip_link(problem)
    if not problem.is_polyhedral:
        raise InputError("analyze requires a polyhedral surrogate")
    try:
        atlas, cells, certificate = _analysis_pipeline(problem, args.threads)
    except AtlasConstructionError as exc:
        raise InputError(f"atlas construction failed: {exc}") from None
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "regretcert", "version": __version__},
        "problem": _problem_summary(problem),
        "atlas": _atlas_summary(atlas),
        "cells": _cells_summary(cells),
        "certificate": certificate_to_document(certificate),
        "verification": None,
    }
    _emit(doc, args.out)
    return EXIT_OK if certificate.consistent else EXIT_INCONSISTENT


def cmd_verify(args) -> int:
    _, problem = _load_entry(args.problem)
    if not problem.is_polyhedral:
        raise InputError("verify requires a polyhedral surrogate")
    if args.samples < 1:
        raise InputError("--samples must be a positive integer")
    atlas, cells, certificate = _analysis_pipeline(problem, args.threads)
    if not certificate.consistent:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "regretcert", "version": __version__},
            "problem": _problem_summary(problem),
            "certificate": certificate_to_document(certificate),
        }
        _emit(doc, args.out)
        return EXIT_INCONSISTENT

    if args.alpha == "auto":
        alpha = certificate.exact_alpha
    elif is_rational_literal(args.alpha):
        alpha = parse_rational(args.alpha)
    else:
        raise InputError(f"--alpha must be 'auto' or a rational literal, got {args.alpha!r}")

    witnesses = certificate_witness_pairs(certificate)
    conditional = verify_conditional(
        problem, alpha, args.samples, args.seed, atlas=atlas, inject=witnesses
    )
    batches = max(1, args.samples // 100)
    distributional = verify_distributional_batches(
        problem, alpha, batches, args.seed + 1, atlas=atlas
    )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "regretcert", "version": __version__},
        "problem": _problem_summary(problem),
        "alpha": format_rational(alpha),
        "certificate": certificate_to_document(certificate),
        "verification": {
            "conditional": conditional.to_document(),
            "distributional": distributional.to_document(),
        },
    }
    _emit(doc, args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(conditional.violations_csv())
    return EXIT_OK if conditional.ok and distributional.ok else EXIT_VIOLATION


def _parse_grid(spec: str):
    if spec is None:
        return geometric_grid()
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            count = int(parts[0])
            if count < 5:
                raise InputError(f"grid needs at least 5 points, got {count}")
            return geometric_grid(count=count)
        if len(parts) == 3:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 5:
                raise InputError(f"grid needs at least 5 points, got {count}")
            return geometric_grid(start=start, stop=stop, count=count)
    except (ValueError, SweepConfigError) as exc:
        raise InputError(f"bad --grid {spec!r}: {exc}") from None
    raise InputError(f"bad --grid {spec!r}: expected COUNT or START:STOP:COUNT")


def _sweep_rows_csv(rows, dim):
    header = ["lambda", "target_regret", "surrogate_regret"] + [
        f"u_{j}" for j in range(dim)
    ]
    lines = [",".join(header)]
    for r in rows:
        fields = [f"{r.lam:.17g}", f"{r.target_regret:.17g}", f"{r.surrogate_regret:.17g}"]
        fields += [f"{v:.17g}" for v in r.u_lambda]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


def cmd_lowerbound(args) -> int:
    try:
        entry = builtin(args.name)
    except ZooLookupError as exc:
        raise InputError(str(exc)) from None
    if entry.sweep is None:
        raise InputError(f"zoo entry {args.name!r} has no sweep configuration")
    grid = _parse_grid(args.grid)
    cfg = SweepConfig(
        p0=entry.sweep.p0,
        p1=entry.sweep.p1,
        u0=entry.sweep.u0,
        lambda_grid=grid,
        minimizer_tolerance=entry.sweep.minimizer_tolerance,
    )
    rows = sweep_lambda(entry.problem, cfg)
    fit = fit_exponents(rows)
    control = not hasattr(entry.problem.surrogate, "gradient")
    if control:
        lo, hi = CONTROL_SLOPE_WINDOW
        ok = lo <= fit.slope_surrogate <= hi
        mode = "control"
    else:
        slo, shi = SMOOTH_SLOPE_WINDOWS["surrogate"]
        tlo, thi = SMOOTH_SLOPE_WINDOWS["target"]
        ok = slo <= fit.slope_surrogate <= shi and tlo <= fit.slope_target <= thi
        mode = "smooth"

    envelope_doc = None
    if entry.envelope is not None:
        spec = entry.envelope
        beta = spec.smoothness
        if beta is None:
            beta = measure_gradient_lipschitz(
                entry.problem.surrogate, *spec.measure_interval
            )
        surrogate = entry.problem.surrogate
        u0_exact = tuple(rat(Fraction(v)) for v in entry.sweep.u0)
        linked = link_eval(entry.problem.link, u0_exact)
        _, gamma_p1 = bayes_risk_target(entry.problem.target, entry.sweep.p1)
        optimal = next(r for r in entry.problem.target.reports if r in gamma_p1)
        env = analytic_envelope(
            spec.strong_convexity,
            beta,
            spec.radius,
            entry.sweep.u0,
            spec.u1,
            _expected_at(surrogate, entry.sweep.p1, entry.sweep.u0),
            _expected_at(surrogate, entry.sweep.p1, spec.u1),
            entry.sweep.p1,
            entry.problem.target,
            linked,
            optimal,
        )
        checked, violations = check_envelope(rows, env)
        envelope_doc = {
            "strong_convexity": env.strong_convexity,
            "smoothness": env.smoothness,
            "radius": env.radius,
            "lambda_threshold": env.lambda_threshold,
            "lambda_smooth_cap": env.lambda_smooth_cap,
            "target_slope": env.target_slope,
            "surrogate_quadratic": env.surrogate_quadratic,
            "rows_checked": checked,
            "violations": len(violations),
        }
        ok = ok and not violations

    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "regretcert", "version": __version__},
        "entry": args.name,
        "mode": mode,
        "grid": [f"{v:.17g}" for v in grid],
        "slope_target": fit.slope_target,
        "slope_surrogate": fit.slope_surrogate,
        "c_estimate": fit.c_estimate,
        "rows_used": fit.rows_used,
        "envelope": envelope_doc,
    }
    _emit(doc, args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(_sweep_rows_csv(rows, len(rows[0].u_lambda)))
    return EXIT_OK if ok else EXIT_EXPONENT


def _expected_at(surrogate, p, u):
    """Expected surrogate loss <p, L(u)> as a float, for smooth or
    polyhedral surrogates (the envelope's reference values)."""
    if hasattr(surrogate, "value"):
        return sum(float(w) * surrogate.value(y, u) for y, w in enumerate(p.probs) if w != 0)
    exact = tuple(rat(Fraction(v)) for v in u)
    return float(expected_loss(surrogate, p, exact))


def cmd_zoo(args) -> int:
    if args.zoo_command == "list":
        for name in catalog_names():
            sys.stdout.write(name + "\n")
        return EXIT_OK
    try:
        entry = builtin(args.name)
    except ZooLookupError as exc:
        raise InputError(str(exc)) from None
    try:
        sys.stdout.write(serialize_problem(entry.problem))
    except ProblemFormatError as exc:
        raise InputError(str(exc)) from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regretcert",
        description="Exact consistency certificates and regret-transfer "
        "constants for polyhedral surrogate losses.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="atlas, cells, and consistency certificate")
    p.add_argument("problem", help="problem file path or zoo://NAME")
    p.add_argument("--flip-link", action="store_true", help="debug: reverse the link's reports")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="randomized exact transfer verification")
    p.add_argument("problem", help="problem file path or zoo://NAME")
    p.add_argument("--alpha", default="auto", help="'auto' (optimal constant) or a rational")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None, help="write violation rows as CSV here")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("lowerbound", help="smooth-surrogate mixture sweep and exponents")
    p.add_argument("name", help="zoo entry with a sweep configuration")
    p.add_argument("--grid", default=None, help="COUNT or START:STOP:COUNT geometric grid")
    p.add_argument("--csv", default=None, help="write sweep rows as CSV here")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("zoo", help="catalog of built-in problems")
    zsub = p.add_subparsers(dest="zoo_command", required=True)
    zlist = zsub.add_parser("list", help="list entry names")
    zlist.set_defaults(func=cmd_zoo)
    zexp = zsub.add_parser("export", help="export an entry as a problem file")
    zexp.add_argument("name")
    zexp.set_defaults(func=cmd_zoo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        InputError,
        ProblemFormatError,
        ZooLookupError,
        SweepConfigError,
        AtlasConstructionError,
        UnsupportedScaleError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
