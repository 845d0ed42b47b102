"""Command-line interface.

Subcommands: analyze, coverage-curve, jeffreys-curve, fit, simulate, verify.
Exit codes: 0 success, 1 domain/data error, 2 usage error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import empirical_bayes as eb
from . import verification
from .errors import DataValidationError, DomainError, NumericalError
from .flatprior import flat_abs_posterior_mean
from .jeffreys import jeffreys_curve
from .posterior import (
    CoverageCurve,
    Estimate,
    PosteriorSummary,
    PriorSpec,
    coverage_curve,
    implied_se,
    posterior,
    prior_data_conflict,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3

CONFLICT_WARNING = (
    "warning: two-sided p < 0.001 signals prior-data conflict; the default "
    "N(0, se^2) prior should not be used (such a |z| has only ~2% probability "
    "under it)"
)


def _summary_dict(s: PosteriorSummary) -> dict:
    return {
        "post_mean": s.post_mean,
        "post_sd": s.post_sd,
        "sign_prob_positive": s.sign_prob_positive,
        "credible_interval": list(s.credible_interval),
        "level": s.level,
        "conditional_coverage_95": s.conditional_coverage_95,
        "conflict": s.conflict,
        "two_sided_p": s.two_sided_p,
    }


def build_analysis_report(
    b: float, se: float | None, p: float | None, tau: float, level: float
) -> dict:
    warnings: list[str] = []
    if se is None:
        se = implied_se(b, p)
        warnings.append(f"standard error implied from p-value: se = |b|/|z| = {se:.6g}")
    est = Estimate(b, se)
    default_summary = posterior(est, PriorSpec.scaled(tau), level)
    flat_summary = posterior(est, PriorSpec.flat(), level)
    flag, tail = prior_data_conflict(est)
    if flag:
        warnings.append(CONFLICT_WARNING)
    return {
        "input": {"b": b, "se": se, "p": p, "tau": tau, "level": level},
        "default_prior": _summary_dict(default_summary),
        "flat_prior": _summary_dict(flat_summary),
        "flat_abs_posterior_mean": flat_abs_posterior_mean(est),
        "conflict": {"flag": flag, "marginal_tail_prob": tail},
        "warnings": warnings,
    }


def _print_analysis(report: dict, out=None) -> None:
    out = out or sys.stdout
    inp = report["input"]
    print(f"estimate: b = {inp['b']:g}, se = {inp['se']:.6g}", file=out)
    rows = [
        ("posterior mean", "post_mean"),
        ("posterior sd", "post_sd"),
        ("P(beta > 0 | b)", "sign_prob_positive"),
        ("conditional coverage of [b +/- 1.96 se]", "conditional_coverage_95"),
    ]
    dflt, flat = report["default_prior"], report["flat_prior"]
    tau = inp["tau"]
    print(f"{'':42s}{'default prior (tau=%g)' % tau:>24s}{'flat prior':>20s}", file=out)
    for label, key in rows:
        print(f"{label:42s}{dflt[key]:>24.6f}{flat[key]:>20.6f}", file=out)
    lo, hi = dflt["credible_interval"]
    flo, fhi = flat["credible_interval"]
    lvl = inp["level"]
    print(f"{'%g%% credible interval' % (100 * lvl):42s}"
          f"{'(%.4f, %.4f)' % (lo, hi):>24s}{'(%.4f, %.4f)' % (flo, fhi):>20s}", file=out)
    print(f"two-sided p-value: {dflt['two_sided_p']:.6g}", file=out)
    print(f"flat-prior posterior mean of |beta|: {report['flat_abs_posterior_mean']:.6f}",
          file=out)
    print(f"marginal tail probability of |z| under default prior: "
          f"{report['conflict']['marginal_tail_prob']:.4f}", file=out)
    for w in report["warnings"]:
        print(w, file=out)


def _write_csv(path: str | None, header: list[str], rows) -> None:
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _plot_path(plot_arg: str | None, out: str | None) -> str | None:
    """Resolve the --plot argument; an empty value derives a .png path from --out."""
    if plot_arg is None:
        return None
    if plot_arg != "":
        return plot_arg
    if out is None:
        raise DataValidationError("--plot without a path requires --out")
    stem = out[:-4] if out.endswith(".csv") else out
    return stem + ".png"


def cmd_analyze(args) -> int:
    report = build_analysis_report(args.b, args.se, args.p, args.tau, args.level)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        _print_analysis(report)
    return EXIT_OK


def cmd_coverage_curve(args) -> int:
    import numpy as np

    grid = np.logspace(math.log10(0.001), 0.0, args.points)
    curve = coverage_curve(grid.tolist())
    covs = curve.coverage
    if any(covs[i + 1] < covs[i] for i in range(len(covs) - 1)):
        raise NumericalError("coverage curve is not monotone; refusing to write")
    rows = [(f"{p:.10g}", f"{c:.12g}") for p, c in curve.rows()]
    if args.json:
        print(json.dumps({"p_value": list(curve.p_values), "coverage": list(covs)}))
        if args.out:
            _write_csv(args.out, ["p_value", "coverage"], rows)
    else:
        _write_csv(args.out, ["p_value", "coverage"], rows)
    plot = _plot_path(args.plot, args.out)
    if plot:
        from .plotting import render_coverage_curve

        render_coverage_curve(curve, plot)
    return EXIT_OK


def cmd_jeffreys_curve(args) -> int:
    ses = args.se or [0.5, 1.0, 2.0]
    curves = []
    rows = []
    for se in ses:
        curve = jeffreys_curve(se, args.theta_max if args.theta_max else 6.0 * se,
                               args.points)
        curves.append(curve)
        rows.extend(
            (f"{se:g}", f"{t:.10g}", f"{d:.12g}") for t, d in curve.rows()
        )
    if args.json:
        print(json.dumps([
            {"se": c.se, "theta": list(c.theta_grid), "density": list(c.density_values)}
            for c in curves
        ]))
        if args.out:
            _write_csv(args.out, ["se", "theta", "density"], rows)
    else:
        _write_csv(args.out, ["se", "theta", "density"], rows)
    plot = _plot_path(args.plot, args.out)
    if plot:
        from .plotting import render_jeffreys_curves

        render_jeffreys_curves(curves, plot)
    return EXIT_OK


def _read_input_csv(path: str) -> list[tuple[str, float]]:
    records: list[tuple[str, float]] = []
    bad_lines: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["study_id", "p_value"]:
            raise DataValidationError(
                f"{path}: expected header 'study_id,p_value', got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                bad_lines.append(lineno)
                continue
            try:
                records.append((row[0], float(row[1])))
            except ValueError:
                bad_lines.append(lineno)
    if bad_lines:
        raise DataValidationError(f"{path}: unparseable rows at lines {bad_lines}")
    return records


def cmd_fit(args) -> int:
    records = _read_input_csv(args.input)
    dataset, dropped = eb.ingest(records)
    cfg = eb.FitConfig(gh_nodes=args.gh_nodes)
    if args.model == "mixed":
        fit = eb.fit_mixed(dataset, cfg)
    else:
        fit = eb.fit_marginal(dataset)
    report = {
        "fit": fit.to_dict(),
        "dropped": [
            {"index": d.index, "study_id": d.study_id, "p_value": d.p_value,
             "reason": d.reason}
            for d in dropped
        ],
    }
    payload = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    if args.json:
        print(payload)
    else:
        lo, hi = fit.sqrt_phi_ci
        print(f"model: {fit.model_kind}")
        print(f"sqrt(phi) = {fit.sqrt_phi:.4f} (95% CI: {lo:.4f} to {hi:.4f})")
        print(f"phi = {fit.phi:.4f}, sigma = {fit.sigma:.4f}, "
              f"log-likelihood = {fit.log_likelihood:.4f}")
        print(f"records: {fit.n_records} in {fit.n_studies} studies; "
              f"dropped: {len(dropped)} "
              f"(censored: {sum(d.reason == 'censored-by-protocol' for d in dropped)}, "
              f"invalid: {sum(d.reason == 'invalid' for d in dropped)})")
        for flag in fit.flags:
            print(f"flag: {flag}")
    if not fit.converged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_simulate(args) -> int:
    dataset = eb.simulate_dataset(
        args.phi, args.sigma, args.studies, args.per_study, args.seed,
        drop_censored=args.drop_censored,
    )
    rows = [(sid, f"{p:.17g}") for sid, p in eb.dataset_to_records(dataset)]
    _write_csv(args.out, ["study_id", "p_value"], rows)
    if args.json:
        print(json.dumps({"path": args.out, "n_records": len(rows),
                          "n_studies": len(dataset), "seed": args.seed}))
    return EXIT_OK


def cmd_verify(args) -> int:
    reports = verification.run_all(seed=args.seed, n=args.n)
    for r in reports:
        print(json.dumps(r.to_dict()))
    return EXIT_OK if verification.all_passed(reports) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defaultprior",
        description="Shrinkage-default Bayesian inference for regression coefficients.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="posterior summary for one estimate")
    p.add_argument("--b", type=float, required=True, help="coefficient estimate")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--se", type=float, help="standard error of the estimate")
    group.add_argument("--p", type=float, help="two-sided p-value (implies the se)")
    p.add_argument("--tau", type=float, default=1.0,
                   help="prior sd as a multiple of se (default 1)")
    p.add_argument("--level", type=float, default=0.95, help="credible level")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("coverage-curve",
                       help="conditional coverage vs two-sided p-value (CSV)")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--plot", nargs="?", const="",
                   help="also render a PNG (path optional with --out)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_coverage_curve)

    p = sub.add_parser("jeffreys-curve",
                       help="sign/magnitude Jeffreys prior curves (CSV)")
    p.add_argument("--se", type=float, action="append",
                   help="standard error (repeatable; default 0.5 1 2)")
    p.add_argument("--theta-max", type=float, default=None,
                   help="grid upper end (default 6*se)")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--plot", nargs="?", const="",
                   help="also render a PNG (path optional with --out)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_jeffreys_curve)

    p = sub.add_parser("fit", help="empirical-Bayes fit to a p-value corpus")
    p.add_argument("--input", required=True, help="CSV with header study_id,p_value")
    p.add_argument("--model", choices=["mixed", "marginal"], default="mixed")
    p.add_argument("--gh-nodes", type=int, default=40)
    p.add_argument("--out", help="JSON output path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw a synthetic p-value corpus")
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--studies", type=int, required=True)
    p.add_argument("--per-study", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--drop-censored", action="store_true",
                   help="drop records with p <= 0.001 at the source")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the Monte-Carlo verification suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, DataValidationError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
