"""Command-line front end: run checkers and emit machine-readable reports.

Exit codes: 0 success / all checks pass, 1 usage error, 2 at least one bound
check failed, 3 numerical failure (solver non-convergence, singular system,
unwritable output).  All randomness flows from --seed; identical invocations
produce byte-identical CSV regardless of AGGLAB_THREADS.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import harness
from .complexity import complexity_profile
from .errors import NumericalError
from .estimators import FiniteClass, empirical_risks, exp_weights, q_aggregation
from .harness import MCReport
from .simplex import SimplexWeights, mixture_values
from .vcclass import (
    singletons_projection,
    star_number_bruteforce,
    thresholds_projection,
    vc_dimension_bruteforce,
)

CSV_COLUMNS = (
    "experiment",
    "estimator",
    "seed",
    "reps",
    "n",
    "M",
    "d",
    "beta",
    "delta",
    "bound",
    "empirical",
    "stderr",
    "margin",
    "pass",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    text = str(value)
    if "," in text or "\n" in text:
        raise ValueError(f"field value {text!r} would break the CSV schema")
    return text


def report_rows(reports: Sequence[MCReport]) -> list[dict]:
    rows = []
    for r in reports:
        rows.append(
            {
                "experiment": r.experiment,
                "estimator": r.estimator_id,
                "seed": int(r.seed),
                "reps": int(r.replications),
                "n": int(r.n),
                "M": int(r.m),
                "d": int(r.d),
                "beta": float(r.beta),
                "delta": float(r.delta),
                "bound": float(r.bound),
                "empirical": float(r.empirical),
                "stderr": float(r.stderr),
                "margin": float(r.margin),
                "pass": bool(r.passed),
            }
        )
    return rows


def render_csv(reports: Sequence[MCReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in report_rows(reports):
        lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def render_json(reports: Sequence[MCReport]) -> str:
    rows = report_rows(reports)
    for row in rows:
        for key, value in row.items():
            if isinstance(value, float):
                row[key] = float(f"{value:.12g}") if math.isfinite(value) else value
    return json.dumps(rows, indent=2) + "\n"


def emit_report(reports: Sequence[MCReport], fmt: str = "csv", path: str | None = None) -> None:
    """Write the report batch as CSV or JSON to ``path`` (stdout when None)."""
    if not reports:
        raise ValueError("empty report list")
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    text = render_csv(reports) if fmt == "csv" else render_json(reports)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _int_list(text: str) -> list[int]:
    return [int(piece) for piece in text.split(",") if piece]


def _float_list(text: str) -> list[float]:
    return [float(piece) for piece in text.split(",") if piece]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agglab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--seed", type=int, default=7, help="master seed (default: %(default)s)")
        p.add_argument("--reps", type=int, default=2000, help="Monte Carlo replications (default: %(default)s)")
        p.add_argument("--delta", type=float, default=0.05, help="deviation level (default: %(default)s)")
        p.add_argument("--output", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default: %(default)s)")
        p.add_argument("--figures", default=None, help="directory for rendered figures (default: none)")

    check = sub.add_parser("check", help="run one theorem checker from flags")
    check.add_argument(
        "--thm",
        required=True,
        choices=("fixed-ew", "fixed-q", "random-q", "model-agg", "ridge", "pm", "sure"),
        help="which bound to check",
    )
    check.add_argument("--n", type=int, default=200, help="sample size (default: %(default)s)")
    check.add_argument("--M", default="10", help="class size, comma list allowed for model-agg (default: %(default)s)")
    check.add_argument("--d", type=int, default=2, help="covariate dimension for ridge (default: %(default)s)")
    check.add_argument("--sigma", type=float, default=1.0, help="noise level, fixed design (default: %(default)s)")
    check.add_argument("--b", type=float, default=1.0, help="boundedness level, random design (default: %(default)s)")
    check.add_argument("--lam", default="0.1", help="ridge penalty, comma list allowed (default: %(default)s)")
    check.add_argument("--scale", type=float, default=1.0, help="dictionary scale (default: %(default)s)")
    check.add_argument("--c1", type=float, default=harness.DEFAULT_C1, help="random-design temperature constant (default: %(default)s)")
    check.add_argument(
        "--c2-ceiling",
        type=float,
        default=harness.DEFAULT_C2_CEILING,
        help="ceiling for the implied deviation constant (default: %(default)s)",
    )
    common(check)

    experiment = sub.add_parser("experiment", help="run a checker described by a JSON config file")
    experiment.add_argument("--config", required=True, help="path to the experiment config")
    common(experiment)

    complexity_p = sub.add_parser("complexity", help="tabulate global/local complexities on a seeded instance")
    complexity_p.add_argument("--M", type=int, default=20, help="number of atoms (default: %(default)s)")
    complexity_p.add_argument("--scale", type=float, default=1.0, help="risk scale (default: %(default)s)")
    complexity_p.add_argument("--beta-max", type=float, default=10.0, help="largest beta (default: %(default)s)")
    complexity_p.add_argument("--beta-points", type=int, default=41, help="grid size (default: %(default)s)")
    common(complexity_p)

    estimate = sub.add_parser("estimate", help="run one estimator on one seeded fixed-design sample")
    estimate.add_argument("--estimator", choices=("ew", "q"), default="ew", help="estimator (default: %(default)s)")
    estimate.add_argument("--n", type=int, default=50, help="sample size (default: %(default)s)")
    estimate.add_argument("--M", type=int, default=10, help="class size (default: %(default)s)")
    estimate.add_argument("--sigma", type=float, default=1.0, help="noise level (default: %(default)s)")
    estimate.add_argument("--beta", type=float, default=None, help="inverse temperature (default: n/(8 sigma^2))")
    common(estimate)

    vc = sub.add_parser("vc", help="brute-force VC dimension and star number")
    vc.add_argument("--class", dest="klass", choices=("thresholds", "singletons"), required=True, help="projection class")
    vc.add_argument("--m", type=int, required=True, help="number of sample points")

    return parser


def _check_reports(args) -> list[MCReport]:
    thm = args.thm
    if thm == "fixed-ew":
        spec = harness.make_fixed_spec(args.n, int(args.M), args.sigma, args.seed, args.scale)
        return [harness.check_thm_fixed_ew(spec, args.reps)]
    if thm == "fixed-q":
        spec = harness.make_fixed_spec(args.n, int(args.M), args.sigma, args.seed, args.scale)
        return [harness.check_thm_fixed_q(spec, args.reps, args.delta)]
    if thm == "random-q":
        spec = harness.make_finite_random_spec(args.n, int(args.M), args.b, args.seed)
        return [harness.check_thm_random_q(spec, args.reps, args.delta, args.c1, args.c2_ceiling)]
    if thm == "model-agg":
        specs = [harness.make_adaptivity_spec(args.n, m, args.b, args.seed) for m in _int_list(str(args.M))]
        return harness.check_model_aggregation(specs, args.reps, args.delta)
    if thm == "ridge":
        spec = harness.make_linear_random_spec(args.n, args.d, args.b, args.seed)
        reports: list[MCReport] = []
        for lam in _float_list(str(args.lam)):
            reports.extend(harness.check_ridge_family(spec, args.reps, lam))
        return reports
    if thm == "pm":
        spec = harness.make_finite_random_spec(args.n, int(args.M), args.b, args.seed)
        return [harness.check_progressive_mixture(spec, args.reps)]
    if thm == "sure":
        spec = harness.make_fixed_spec(args.n, int(args.M), args.sigma, args.seed, args.scale)
        return [harness.check_sure_unbiased(spec, args.reps)]
    raise ValueError(f"unknown theorem {thm!r}")


def _cmd_check(args) -> int:
    reports = _check_reports(args)
    emit_report(reports, args.format, args.output)
    if args.figures:
        from .figures import save_report_figure

        save_report_figure(reports, args.figures)
    return 0 if all(r.passed for r in reports) else 2


def _cmd_experiment(args) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    merged = argparse.Namespace(
        thm=config["check"],
        n=int(config.get("n", 200)),
        M=str(config.get("M", "10")).replace(" ", "").strip("[]"),
        d=int(config.get("d", 2)),
        sigma=float(config.get("sigma", 1.0)),
        b=float(config.get("b", 1.0)),
        lam=str(config.get("lam", "0.1")).replace(" ", "").strip("[]"),
        scale=float(config.get("scale", 1.0)),
        c1=float(config.get("c1", harness.DEFAULT_C1)),
        c2_ceiling=float(config.get("c2_ceiling", harness.DEFAULT_C2_CEILING)),
        seed=args.seed if args.seed_given else int(config.get("seed", args.seed)),
        reps=args.reps if args.reps_given else int(config.get("replications", args.reps)),
        delta=args.delta if args.delta_given else float(config.get("delta", args.delta)),
        output=args.output,
        format=args.format,
        figures=args.figures,
    )
    return _cmd_check(merged)


def _cmd_complexity(args) -> int:
    rng = harness.rng_for(args.seed, 0, harness.STREAM_CLASS)
    risks = args.scale * rng.uniform(0.0, 1.0, size=args.M)
    prior = SimplexWeights.uniform(args.M)
    grid = np.linspace(0.0, args.beta_max, args.beta_points)
    profile = complexity_profile(prior, risks, grid)
    lines = ["beta,global,local"]
    for b, g, l in zip(profile.betas, profile.global_values, profile.local_values):
        lines.append(f"{b:.12g},{g:.12g},{l:.12g}")
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    if args.figures:
        from .figures import save_profile_figure

        save_profile_figure(profile, args.figures)
    return 0


def _cmd_estimate(args) -> int:
    spec = harness.make_fixed_spec(args.n, args.M, args.sigma, args.seed)
    beta = args.beta if args.beta is not None else args.n / (8.0 * args.sigma**2)
    y = harness.gen_fixed_design(spec, 0)
    fc = FiniteClass(spec.class_matrix, y)
    prior = spec.prior()
    if args.estimator == "ew":
        weights = exp_weights(prior, fc, beta)
    else:
        result = q_aggregation(prior, fc, beta)
        if not result.converged:
            raise NumericalError("Q-aggregation did not converge")
        weights = result.weights
    risks = empirical_risks(fc).values
    mix = mixture_values(weights, spec.class_matrix)
    mixture_risk = float(np.mean((mix - spec.f_star) ** 2))
    lines = ["atom,weight,empirical_risk"]
    for j, (w, r) in enumerate(zip(weights.probs, risks)):
        lines.append(f"{j},{w:.12g},{r:.12g}")
    lines.append(f"mixture,{1.0:.12g},{mixture_risk:.12g}")
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return 0


def _cmd_vc(args) -> int:
    if args.klass == "thresholds":
        pc = thresholds_projection(np.arange(args.m, dtype=float))
    else:
        pc = singletons_projection(args.m)
    vc = vc_dimension_bruteforce(pc)
    star = star_number_bruteforce(pc)
    sys.stdout.write(f"vc={vc} star={star}\n")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    if args.command == "experiment":
        args.seed_given = any(a.startswith("--seed") for a in argv)
        args.reps_given = any(a.startswith("--reps") for a in argv)
        args.delta_given = any(a.startswith("--delta") for a in argv)
    handlers = {
        "check": _cmd_check,
        "experiment": _cmd_experiment,
        "complexity": _cmd_complexity,
        "estimate": _cmd_estimate,
        "vc": _cmd_vc,
    }
    try:
        return handlers[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
