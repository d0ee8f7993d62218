"""Command-line front end: fit, sensitivity, simulate, plot.

Exit codes: 0 success, 2 configuration or parse error, 3 convergence
failure, 4 numeric failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import report as report_mod
from .data import load_studies
from .errors import (
    ConstraintInfeasibleError,
    ConvergenceFailureError,
    NumericFailureError,
    ParseError,
    SingularInformationError,
)
from .estimator import (
    DEFAULT_C_PAIRS,
    DEFAULT_P_GRID,
    fit_adjusted,
    fit_unadjusted,
    sensitivity_analysis,
)
from .links import get_link
from .quadrature import gauss_hermite
from .selection import SelectionSpec
from .simulation import (
    SimScenario,
    experiment_scenario,
    run_simulation_study,
    sparsity_replication,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_NUMERIC = 4

_CONFIG_FIELDS = {
    "link": str,
    "quad_order": int,
    "c_pairs": list,
    "p_grid": list,
    "gamma1": (str, int, float),
    "method": str,
    "out_dir": str,
    "seed": int,
    "formats": list,
}

_SCENARIO_FIELDS = {
    "sens": float, "spec": float, "beta": float,
    "sigma_theta": float, "sigma_alpha": float,
    "n1_range": list, "n0_range": list,
    "gamma1": float, "p_target": float,
    "c0": float, "c1": float, "s_tilde": int, "link": str,
}


class ConfigError(ValueError):
    pass


def _load_json_file(path, what):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{what} {path!r} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc


def load_run_config(path):
    """Validated run configuration from a JSON file; unknown keys rejected."""
    raw = _load_json_file(path, "config file")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path!r}: top level must be an object")
    for key, value in raw.items():
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"config file {path!r}: unknown field {key!r}")
        expected = _CONFIG_FIELDS[key]
        if not isinstance(value, expected):
            raise ConfigError(
                f"config file {path!r}: field {key!r} has wrong type "
                f"{type(value).__name__}"
            )
    if "c_pairs" in raw:
        pairs = []
        for i, pair in enumerate(raw["c_pairs"]):
            if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                    or not all(isinstance(v, (int, float)) for v in pair)):
                raise ConfigError(
                    f"config file {path!r}: c_pairs[{i}] must be a [c0, c1] number pair"
                )
            pairs.append((float(pair[0]), float(pair[1])))
        raw["c_pairs"] = tuple(pairs)
    if "p_grid" in raw:
        grid = raw["p_grid"]
        if not grid:
            raise ConfigError(f"config file {path!r}: p_grid must be non-empty")
        for i, p in enumerate(grid):
            if not isinstance(p, (int, float)) or not (0.0 < p <= 1.0):
                raise ConfigError(
                    f"config file {path!r}: p_grid[{i}] must be a probability in (0, 1]"
                )
        raw["p_grid"] = tuple(float(p) for p in grid)
    return raw


def load_scenario_file(path):
    raw = _load_json_file(path, "scenario file")
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario file {path!r}: top level must be an object")
    kwargs = {}
    for key, value in raw.items():
        if key not in _SCENARIO_FIELDS:
            raise ConfigError(f"scenario file {path!r}: unknown field {key!r}")
        expected = _SCENARIO_FIELDS[key]
        if expected is float and isinstance(value, (int, float)):
            kwargs[key] = float(value)
        elif expected is list and isinstance(value, list) and len(value) == 2:
            kwargs[key] = (value[0], value[1])
        elif isinstance(value, expected):
            kwargs[key] = value
        else:
            raise ConfigError(
                f"scenario file {path!r}: field {key!r} has wrong type "
                f"{type(value).__name__}"
            )
    try:
        return SimScenario(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario file {path!r}: {exc}") from exc


def _parse_gamma1(text):
    if text == "profile":
        return "profile"
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"--gamma1 must be 'profile' or a number, got {text!r}")
    if value < 0:
        raise ConfigError("--gamma1 must be non-negative")
    return value


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dtameta",
        description=(
            "Meta-analysis of diagnostic accuracy with an exact binomial "
            "bivariate model, SROC/SAUC summaries, and publication-bias "
            "sensitivity analysis."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quad-order", type=int, default=None,
                        help="Gauss-Hermite quadrature order (default 21)")
    common.add_argument("--method", choices=("approx", "exact"), default=None,
                        help="marginal selection probability route")
    common.add_argument("--gamma1", default=None, metavar="profile|VALUE",
                        help="profile the selection slope or fix it")
    common.add_argument("--link", choices=("logistic", "probit"), default=None)
    common.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default: current directory)")
    common.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", parents=[common],
                           help="single fit at one marginal probability")
    p_fit.add_argument("studies", help="studies CSV (label,tp,fp,fn,tn[,cutoff])")
    p_fit.add_argument("--config", default=None, help="JSON run configuration")
    p_fit.add_argument("--p", type=float, default=1.0,
                       help="marginal selection probability (default 1.0)")
    p_fit.add_argument("--c0", type=float, default=None)
    p_fit.add_argument("--c1", type=float, default=None)

    p_sens = sub.add_parser("sensitivity", parents=[common], help="full (c-pair, p) sensitivity grid")
    p_sens.add_argument("studies")
    p_sens.add_argument("--config", default=None)

    p_sim = sub.add_parser("simulate", parents=[common], help="simulation study summaries")
    p_sim.add_argument("--scenario", required=True,
                       help="experiment number 1..6 or scenario JSON file")
    p_sim.add_argument("--studies", type=int, default=None, metavar="S",
                       help="population size per replication")
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--sparsity-only", action="store_true",
                       help="skip estimator fits; report sparsity rates only")

    p_plot = sub.add_parser("plot", parents=[common], help="re-render figures from a result JSON")
    p_plot.add_argument("results", help="result JSON produced by fit/sensitivity")
    return parser


def _resolve(args, config, key, default):
    cli_value = getattr(args, key, None)
    if cli_value is not None:
        return cli_value
    if config and key in config:
        return config[key]
    return default


def _check_out_dir(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir!r} is not writable")


def _cmd_fit(args, config):
    studies = load_studies(args.studies)
    link_name = _resolve(args, config, "link", "logistic")
    link = get_link(link_name)
    rule = gauss_hermite(_resolve(args, config, "quad_order", 21))
    method = _resolve(args, config, "method", "approx")
    out_dir = _resolve(args, config, "out", None) or (config or {}).get("out_dir", ".")
    _check_out_dir(out_dir)

    p = args.p
    if not (0.0 < p <= 1.0):
        raise ConfigError(f"--p must be in (0, 1], got {p}")
    if p >= 1.0:
        fit = fit_unadjusted(studies, link=link, rule=rule)
    else:
        c_pairs = (config or {}).get("c_pairs", DEFAULT_C_PAIRS)
        c0 = args.c0 if args.c0 is not None else c_pairs[0][0]
        c1 = args.c1 if args.c1 is not None else c_pairs[0][1]
        gamma1 = _parse_gamma1(str(_resolve(args, config, "gamma1", "profile")))
        spec = SelectionSpec(
            c0=c0, c1=c1,
            gamma1=1.0 if gamma1 == "profile" else gamma1,
            p=p,
        )
        fit = fit_adjusted(
            studies, spec, profile_gamma1=(gamma1 == "profile"),
            method=method, link=link, rule=rule,
        )
    doc = report_mod.fit_report(fit, studies, link=link_name)
    formats = tuple((config or {}).get("formats", ("json", "csv", "svg")))
    paths = report_mod.emit_report(doc, out_dir, "fit", formats=formats)
    s = fit.sroc
    print(f"SAUC {s.sauc:.4f}  95% CI [{s.ci_low:.4f}, {s.ci_high:.4f}]  "
          f"converged={fit.converged}")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK if fit.converged else EXIT_CONVERGENCE


def _cmd_sensitivity(args, config):
    studies = load_studies(args.studies)
    link_name = _resolve(args, config, "link", "logistic")
    link = get_link(link_name)
    rule = gauss_hermite(_resolve(args, config, "quad_order", 21))
    method = _resolve(args, config, "method", "approx")
    out_dir = _resolve(args, config, "out", None) or (config or {}).get("out_dir", ".")
    _check_out_dir(out_dir)
    gamma1 = _parse_gamma1(str(_resolve(args, config, "gamma1", "profile")))

    table = sensitivity_analysis(
        studies,
        c_pairs=(config or {}).get("c_pairs", DEFAULT_C_PAIRS),
        p_grid=(config or {}).get("p_grid", DEFAULT_P_GRID),
        gamma1_policy=gamma1,
        gamma1_init=1.0,
        method=method, link=link, rule=rule,
    )
    doc = report_mod.sensitivity_report(table, studies, link=link_name)
    formats = tuple((config or {}).get("formats", ("json", "csv", "svg")))
    paths = report_mod.emit_report(doc, out_dir, "sensitivity", formats=formats)
    n_failed = sum(1 for row in table if row.result is None)
    print(f"{len(table)} rows, {n_failed} failed")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK if n_failed == 0 else EXIT_CONVERGENCE


def _cmd_simulate(args, config):
    if args.scenario.isdigit():
        scenario = experiment_scenario(int(args.scenario))
    else:
        scenario = load_scenario_file(args.scenario)
    if args.studies is not None:
        from dataclasses import replace
        scenario = replace(scenario, s_tilde=args.studies)
    seed = args.seed if args.seed is not None else (config or {}).get("seed", 0)
    out_dir = args.out or (config or {}).get("out_dir", ".")
    _check_out_dir(out_dir)
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")

    if args.sparsity_only:
        rates = sparsity_replication(scenario, replications=args.reps, master_seed=seed)
        full, pub = rates["full"], rates["published"]
        header = "population,zero_pct,le3_pct,le5_pct"
        lines = [
            header,
            f"full,{full.zero_pct!r},{full.le3_pct!r},{full.le5_pct!r}",
            f"published,{pub.zero_pct!r},{pub.le3_pct!r},{pub.le5_pct!r}",
        ]
        path = os.path.join(out_dir, "sparsity.csv")
        report_mod._atomic_write(path, "\n".join(lines) + "\n")
        print(f"published fraction {rates['published_fraction']:.3f}")
        print(f"wrote {path}")
        return EXIT_OK

    gamma1 = _parse_gamma1(str(_resolve(args, config, "gamma1", "profile")))
    summary = run_simulation_study(
        scenario,
        replications=args.reps,
        master_seed=seed,
        gamma1_mode="profile" if gamma1 == "profile" else gamma1,
    )
    doc = report_mod.simulation_report(summary)
    formats = tuple((config or {}).get("formats", ("json", "csv")))
    paths = report_mod.emit_report(doc, out_dir, "simulation", formats=formats)
    for row in summary.rows:
        print(f"{row.label}: mean {row.mean_sauc100:.1f} sd {row.sd_sauc100:.1f} "
              f"({row.reps_used} used, {row.n_failed} failed)")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_plot(args, config):
    doc = _load_json_file(args.results, "results file")
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"results file {args.results!r}: missing 'kind' field")
    if doc.get("schema_version") != report_mod.SCHEMA_VERSION:
        raise ConfigError(
            f"results file {args.results!r}: unsupported schema_version "
            f"{doc.get('schema_version')!r}"
        )
    out_dir = args.out or "."
    _check_out_dir(out_dir)
    basename = os.path.splitext(os.path.basename(args.results))[0]
    figures = report_mod.render_figures(doc)
    if not figures:
        print("no figures defined for this result kind")
        return EXIT_OK
    for suffix, svg_text in figures.items():
        path = os.path.join(out_dir, f"{basename}_{suffix}.svg")
        report_mod._atomic_write(path, svg_text)
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = None
        if getattr(args, "config", None):
            config = load_run_config(args.config)
        if args.gamma1 is not None:
            _parse_gamma1(args.gamma1)  # validate early
        handler = {
            "fit": _cmd_fit,
            "sensitivity": _cmd_sensitivity,
            "simulate": _cmd_simulate,
            "plot": _cmd_plot,
        }[args.command]
        return handler(args, config)
    except (ConfigError, ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailureError, ConstraintInfeasibleError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (NumericFailureError, SingularInformationError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
