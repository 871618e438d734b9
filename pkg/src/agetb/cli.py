"""Command-line interface.

Each subcommand prints a short table to stdout (6 significant digits) and
writes full-precision CSV/JSON files into the output directory. ``--plot``
adds PNG figures next to them. Exit status is 0 on success, 1 for a model
or input error and 2 for a usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .calibrate import FitConfig, fit, holdout_check
from .cluster import OPEN_BIN, cluster_age_bins
from .errors import ModelError
from .model import initial_state
from .reproduction import audit, epsilon_response
from .scenarios import (INTERVENTION_START, WHO_THRESHOLD, WHO_TARGET_YEAR, Override, ScenarioSpec,
                        run_scenario, scenario_sweep, summary, who_target_assessment)
from .sensitivity import DEFAULT_SAMPLES, DEFAULT_SEED, default_ranges, sensitivity_run
from .simulate import DEFAULT_DT, MEASURES, START_YEAR, annual_new_cases, integrate

OUT_ENV = "AGETB_OUT"


def g6(x) -> str:
    return "-" if x is None else f"{x:.6g}"


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or "agetb_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plot(args, fn, *a, **kw):
    if args.plot:
        from . import plots

        getattr(plots, fn)(*a, **kw)


def _print_table(header, rows):
    print(",".join(header))
    for row in rows:
        print(",".join(v if isinstance(v, str) else g6(v) for v in row))


def _parse_assignment(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected PATH=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args, p, out):
    traj = integrate(p, initial_state(), float(START_YEAR), float(args.horizon + 1), args.dt)
    series = annual_new_cases(traj, START_YEAR, args.horizon, measure=args.measure)
    io.write_trajectory(traj, out / "trajectory.csv", every=args.every)
    io.write_annual(series, out / "annual_cases.csv")
    _print_table(["year", "g1", "g2", "g3", "total"], [[str(r.year), *r.cases, r.total] for r in series])
    if traj.clamp_count:
        print(f"# clamped negative entries: {traj.clamp_count}")
    _plot(args, "annual_cases", [r.year for r in series], [r.cases for r in series],
          out / "annual_cases.png", title=args.measure)


def cmd_fit(args, p, out):
    data = io.load_case_series(args.data)
    config = FitConfig(dt=args.dt, measure=args.measure, max_evals=args.max_evals, cycles=args.cycles)
    result = fit(data, p, config)
    holdout = holdout_check(result, data)
    io.write_json(io.fit_report(result, holdout), out / "fit_report.json")
    io.write_residuals(result, out / "residuals.csv")
    (out / "fitted.params").write_text(io.dump_params(result.params))
    _print_table(["parameter", "value"], [[k, v] for k, v in result.fitted.items()])
    print(f"r2,{g6(result.r2)}")
    print(f"converged,{result.converged}")
    for year, err in holdout.items():
        print(f"holdout_{year},{g6(err)}")
    _plot(args, "fit_vs_observed", result, out / "fit.png")


def cmd_repro(args, p, out):
    reports = {sizes: audit(p, sizes=sizes) for sizes in ("initial", "dfe")}
    io.write_json(reports, out / "repro_audit.json")
    headline = reports[args.sizes]
    print(f"R_v,{g6(headline['R_v'])}")
    for sizes, rep in reports.items():
        print(f"R_v[{sizes}],{g6(rep['R_v'])}")
    print("eigenvector," + ",".join(g6(v) for v in headline["eigenvector"]))
    for name, value in headline["symbols"].items():
        print(f"{name},{g6(value)}")
    if args.plot:
        grid = np.linspace(0.0, 0.95, 20)
        values = epsilon_response(p, (1, 3), grid, sizes=args.sizes)
        _plot(args, "epsilon_heatmap", grid, values, (1, 3), out / "eps_response.png")


def cmd_prcc(args, p, out):
    ranges = default_ranges(p, rel=args.rel)
    result = sensitivity_run(p, ranges, n=args.samples, seed=args.seed, sizes=args.sizes)
    io.write_prcc(result, out / "prcc.csv")
    _print_table(["parameter", "prcc"], [[k, v] for k, v in result.ranked()])
    if result.n_failed:
        print(f"# failed samples: {result.n_failed}")
    _plot(args, "prcc_bars", result, out / "prcc.png")


def _report_projections(args, projs, out, stem, threshold=None):
    io.write_projections(projs, out / f"{stem}.csv")
    digests = [summary(pr) for pr in projs]
    io.write_json(digests, out / f"{stem}_summary.json")
    _print_table(["scenario", "total_2025", "total_2035", "target_year"],
                 [[d["scenario"], d["total_2025"], d["total_2035"],
                   str(d["target_year"]) if d["target_year"] else "-"] for d in digests])
    _plot(args, "projections", projs, out / f"{stem}.png", threshold=threshold, first_year=2015)


def cmd_scenario(args, p, out):
    overrides = [Override(k, v, "set") for k, v in args.set] + [Override(k, v, "scale") for k, v in args.scale]
    spec = ScenarioSpec(args.name, tuple(overrides), start_year=args.start, horizon=args.horizon)
    proj = run_scenario(p, spec, dt=args.dt, measure=args.measure)
    _report_projections(args, [proj], out, "scenario", threshold=WHO_THRESHOLD)


def cmd_sweep(args, p, out):
    projs = scenario_sweep(p, args.axis, args.values, horizon=args.horizon, mode=args.mode,
                           start_year=args.start, dt=args.dt, measure=args.measure)
    _report_projections(args, projs, out, "sweep", threshold=WHO_THRESHOLD)


def cmd_who(args, p, out):
    spec = ScenarioSpec("baseline", (), start_year=args.start, horizon=args.horizon)
    proj = run_scenario(p, spec, dt=args.dt, measure=args.measure)
    report = who_target_assessment(proj, threshold=args.threshold, target_year=args.target_year)
    io.write_projections([proj], out / "who_projection.csv")
    io.write_json(report, out / "who.json")
    reached = report["year_reached"]
    print(f"target_year,{reached if reached is not None else 'not reached'}")
    print(f"threshold,{g6(report['threshold'])}")
    print(f"met_by_{args.target_year},{report['met_by_target']}")
    for key in sorted(k for k in report if k.startswith("cases_")):
        print(f"{key},{g6(report[key])}")
    _plot(args, "projections", [proj], out / "who.png", threshold=args.threshold, first_year=2015)


def cmd_cluster(args, p, out):
    table = io.load_incidence_table(args.data)
    if not args.keep_open_bin:
        table = table.without(OPEN_BIN)
    result = cluster_age_bins(table, k=args.k, seed=args.seed)
    io.write_clusters(result, table.rates, out / "clusters.csv")
    _print_table(["age_bin", "mean_rate", "cluster"],
                 [[lab, rate, str(c)] for lab, rate, c in zip(result.labels, table.rates, result.assignment)])
    _plot(args, "cluster_strip", result, table.rates, out / "clusters.png")


# -- parser --------------------------------------------------------------------


def _add_common(sp, dt=DEFAULT_DT) -> None:
    # Added per subparser: argparse parents share action objects, so a
    # per-command default would leak into every other command.
    sp.add_argument("--config", default="varying_n",
                    help="preset name (constant_n, varying_n) or parameter file (default: varying_n)")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for every random draw")
    sp.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./agetb_out)")
    sp.add_argument("--dt", type=float, default=dt, help=f"RK4 step in years (default: {dt:g})")
    sp.add_argument("--measure", choices=MEASURES, default="activation",
                    help="annual case measure (default: activation)")
    sp.add_argument("--plot", action="store_true", help="also write PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agetb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_, dt=DEFAULT_DT):
        sp = sub.add_parser(name, help=help_)
        _add_common(sp, dt)
        sp.set_defaults(func=func)
        return sp

    sp = add("simulate", cmd_simulate, "trajectory and annual cases from the 2005 state")
    sp.add_argument("--horizon", type=int, default=2035, help="last calendar year")
    sp.add_argument("--every", type=int, default=100, help="write every n-th grid point")

    sp = add("fit", cmd_fit, "staged fit of beta1..3 and omega to annual cases", dt=1e-2)
    sp.add_argument("--data", default=None, help="case CSV (default: bundled 2004-2021 series)")
    sp.add_argument("--max-evals", type=int, default=2000, help="evaluation budget per stage")
    sp.add_argument("--cycles", type=int, default=1, help="passes over the three stages")

    sp = add("repro", cmd_repro, "R_v and its next-generation audit")
    sp.add_argument("--sizes", choices=("initial", "dfe"), default="initial",
                    help="group sizes in F and the mixing fractions (headline value)")

    sp = add("prcc", cmd_prcc, "LHS/PRCC sensitivity of R_v")
    sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sp.add_argument("--rel", type=float, default=0.2, help="relative half-width of each range")
    sp.add_argument("--sizes", choices=("initial", "dfe"), default="initial")

    sp = add("scenario", cmd_scenario, "one intervention scenario")
    sp.add_argument("--name", default="scenario")
    sp.add_argument("--set", type=_parse_assignment, action="append", default=[], metavar="PATH=VALUE")
    sp.add_argument("--scale", type=_parse_assignment, action="append", default=[], metavar="PATH=FACTOR")
    sp.add_argument("--start", type=int, default=INTERVENTION_START, help="first intervention year")
    sp.add_argument("--horizon", type=int, default=2035)

    sp = add("sweep", cmd_sweep, "projections over values of one parameter")
    sp.add_argument("--axis", required=True, help="parameter path, e.g. omega or a3")
    sp.add_argument("--values", type=_float_list, required=True, help="comma-separated values")
    sp.add_argument("--mode", choices=("set", "scale"), default="set")
    sp.add_argument("--start", type=int, default=INTERVENTION_START)
    sp.add_argument("--horizon", type=int, default=2035)

    sp = add("who", cmd_who, "first year cases fall to the End-TB threshold")
    sp.add_argument("--horizon", type=int, default=2060)
    sp.add_argument("--threshold", type=float, default=WHO_THRESHOLD)
    sp.add_argument("--target-year", type=int, default=WHO_TARGET_YEAR)
    sp.add_argument("--start", type=int, default=INTERVENTION_START)

    sp = add("cluster", cmd_cluster, "k-means grouping of age bins by incidence")
    sp.add_argument("--data", default=None, help="incidence CSV (default: bundled table)")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--keep-open-bin", action="store_true", help=f"include the {OPEN_BIN} bin")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = io.resolve_params(args.config)
        args.func(args, params, _out_dir(args))
    except (ModelError, OSError) as exc:
        print(f"agetb {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
