"""Command-line entry point: ``gridpv <subcommand> [options]``.

A shared ``--config FILE`` holds ``key = value`` lines (``#`` starts a
comment). Keys are option names without the leading dashes, with either
dashes or underscores (``train-months = 12``). Values from the file become
option defaults; flags given on the command line win.

Exit codes: 0 success, 1 data/validation error (message on stderr),
2 usage error. Log verbosity comes from ``GRIDPV_LOG_LEVEL``.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from gridpv import GridPVError, __version__

log = logging.getLogger("gridpv")

REQUIRED = {
    "reliability": ["events", "substations", "out"],
    "fit-hawkes": ["events", "substations", "out"],
    "simulate": ["model", "events", "substations", "out"],
    "forecast": ["model", "events", "substations", "out"],
    "twopart": ["panel", "out"],
    "ame": ["panel", "out"],
    "margins": ["panel", "variable", "grid", "out"],
    "vif": ["panel", "columns", "out"],
    "baseline-var": ["panel", "out"],
    "scenario": ["trajectory", "out"],
}


class UsageError(Exception):
    pass


# -- config ----------------------------------------------------------------------------------

def read_config(path) -> dict:
    """Parse a key=value file into {dest: string value}."""
    path = Path(path)
    if not path.exists():
        raise GridPVError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GridPVError(f"{path}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise GridPVError(f"{path}: line {lineno}: empty key")
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _int_list(text) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text) -> list[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _grid(text) -> list[float]:
    """'0,60,120' or 'lo:hi:n' (n evenly spaced values)."""
    text = str(text)
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n)).tolist()
    return [float(v) for v in text.split(",") if v.strip()]


def _alpha(text) -> float:
    a = float(text)
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def _positive_int(text) -> int:
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return k


# -- parser ----------------------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file supplying option defaults")
    common.add_argument("--format", choices=["csv", "json", "text"], default="csv")
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="gridpv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gridpv {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs = {}

    def add(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        subs[name] = p
        return p

    p = add("synth", "generate synthetic data with known ground truth")
    p.add_argument("mode", choices=["hawkes", "panel"])
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--n-subs", type=_positive_int, default=5)
    p.add_argument("--mu", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--k-nn", type=_positive_int, default=1)
    p.add_argument("--days", type=float, default=365.0)
    p.add_argument("--start-month", default="2014-01")
    p.add_argument("--units", type=_positive_int, default=44)
    p.add_argument("--months", type=_positive_int, default=111)
    p.add_argument("--zero-fraction", type=float, default=0.5)

    p = add("reliability", "build the substation-month reliability panel")
    p.add_argument("--events")
    p.add_argument("--substations")
    p.add_argument("--covariates")
    p.add_argument("--installs")
    p.add_argument("--gusts", help="daily maximum gust CSV (substation_id, date, max_gust)")
    p.add_argument("--start", help="first month (default: first event month)")
    p.add_argument("--end", help="last month (default: last event month)")
    p.add_argument("--min-duration", type=float, default=0.0)
    p.add_argument("--out")

    p = add("fit-hawkes", "fit the marked Hawkes model by maximum likelihood")
    p.add_argument("--events")
    p.add_argument("--substations")
    p.add_argument("--start", help="time origin month (default: first event month)")
    p.add_argument("--end", help="last training month (default: last event month)")
    p.add_argument("--k-nn", type=_positive_int, default=1)
    p.add_argument("--covariates")
    p.add_argument("--hawkes-covariates", type=_str_list, default=[],
                   help="comma-separated covariate columns entering the base rate")
    p.add_argument("--max-iter", type=_positive_int, default=1000)
    p.add_argument("--no-trend", action="store_true", help="hold the base rate constant in time")
    p.add_argument("--out")

    for name, text in (("simulate", "simulate replications of future months"),
                       ("forecast", "conformal prediction intervals for future months")):
        p = add(name, text)
        p.add_argument("--model")
        p.add_argument("--events")
        p.add_argument("--substations")
        p.add_argument("--covariates")
        p.add_argument("--horizon", type=_positive_int, default=12, help="months to forecast")
        p.add_argument("--replications", "-K", type=_positive_int, default=100)
        p.add_argument("--out")
    subs["simulate"].add_argument("--start", help="first simulated month (default: after training)")
    subs["forecast"].add_argument("--alpha", type=_alpha, default=0.1)
    subs["forecast"].add_argument("--observed-end", help="last observed month (default: last event month)")
    subs["forecast"].add_argument("--calibration-fraction", type=float, default=0.2)
    subs["forecast"].add_argument("--trajectory-out", help="yearly system SAIDI/SAIFI of the ensemble mean")

    for name, text in (("twopart", "two-part IV model of the adoption rate"),
                       ("ame", "average marginal effects with cluster-bootstrap errors"),
                       ("margins", "predictive margins over a grid of values"),
                       ("vif", "variance inflation factors")):
        p = add(name, text)
        p.add_argument("--panel")
        p.add_argument("--covariates", help="extra columns merged on substation_id, month")
        p.add_argument("--out")
        if name == "vif":
            p.add_argument("--columns", type=_str_list)
            continue
        p.add_argument("--horizon", type=int, default=3)
        p.add_argument("--outcome", default="Y")
        p.add_argument("--treatment")
        p.add_argument("--frequency")
        p.add_argument("--instrument")
        p.add_argument("--controls", type=_str_list, default=[])
        p.add_argument("--control-function", type=_bool, default=True)
        p.add_argument("--n-boot", type=int, default=200)
    subs["twopart"].add_argument("--text-out")
    subs["twopart"].add_argument("--ame-out")
    subs["ame"].add_argument("--variables", type=_str_list)
    subs["margins"].add_argument("--variable")
    subs["margins"].add_argument("--grid", type=_grid)

    p = add("baseline-var", "VAR baseline forecast errors (optionally against a Hawkes model)")
    p.add_argument("--panel", help="reliability panel CSV with saidi, saifi, caidi columns")
    p.add_argument("--train-months", type=_positive_int, default=12)
    p.add_argument("--lags", type=_int_list, default=[1, 2])
    p.add_argument("--normalization", default="none",
                   help="label recorded in the header describing how metrics were scaled")
    p.add_argument("--model")
    p.add_argument("--events")
    p.add_argument("--substations")
    p.add_argument("--covariates")
    p.add_argument("--replications", "-K", type=_positive_int, default=100)
    p.add_argument("--out")

    p = add("scenario", "installations under a projected SAIDI trajectory")
    from gridpv import scenario as sc
    p.add_argument("--trajectory", help="CSV with year, saidi_minutes[, saifi]")
    p.add_argument("--baseline-rate", type=float, default=sc.BASELINE_RATE)
    p.add_argument("--households", type=_positive_int, default=sc.HOUSEHOLDS)
    p.add_argument("--years", type=_positive_int, default=sc.YEARS)
    p.add_argument("--ame-per-hour", type=float, default=sc.AME_PER_HOUR)
    p.add_argument("--baseline-saidi", type=float, default=sc.BASELINE_SAIDI)
    p.add_argument("--out")
    return parser, subs


def parse_args(argv) -> argparse.Namespace:
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    config = {}
    if known.config:
        config = read_config(known.config)
        for p in subs.values():
            flags = {a.dest for a in p._actions if isinstance(a, argparse._StoreConstAction)}
            dests = {a.dest for a in p._actions}
            p.set_defaults(**{k: _bool(v) if k in flags else v
                              for k, v in config.items() if k in dests})
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("a subcommand is required")
    unknown = sorted(set(config) - {a.dest for a in subs[args.command]._actions})
    if unknown:
        log.warning("config keys not used by %s: %s", args.command, ", ".join(unknown))
    missing = [k for k in REQUIRED.get(args.command, []) if getattr(args, k.replace("-", "_")) in (None, [])]
    if missing:
        subs[args.command].print_usage(sys.stderr)
        raise UsageError(f"{args.command}: missing required option(s): "
                         + ", ".join("--" + m.replace("_", "-") for m in missing))
    args.config_values = {k: v for k, v in sorted(vars(args).items())
                          if k not in ("config", "config_values")}
    return args


# -- helpers ---------------------------------------------------------------------------------

def _meta(args, **extra):
    from gridpv.report import metadata
    return metadata(args.seed, {k: str(v) for k, v in args.config_values.items()},
                    command=args.command, **extra)


def _emit(args, table, path, **extra):
    from gridpv.report import emit_report
    emit_report(table, path, args.format, _meta(args, **extra))
    log.info("wrote %s", path)


def _existing(path, what="input"):
    p = Path(path)
    if not p.exists():
        raise GridPVError(f"{what} file not found: {p}")
    return p


def _event_window(events, start, end):
    from gridpv.ingest import normalize_month
    if start is None or end is None:
        if not events:
            raise GridPVError("no events: give --start and --end")
        start = start or events[0].month
        end = end or max(e.month for e in events)
    return normalize_month(start), normalize_month(end)


def _load_model(args):
    from gridpv.hawkes import load_model
    from gridpv.ingest import load_events, load_registry
    doc = load_model(_existing(args.model, "model"))
    registry = load_registry(_existing(args.substations))
    if list(registry.ids) != list(doc["substation_ids"]):
        raise GridPVError("substation registry does not match the model's substations")
    events = load_events(_existing(args.events))
    return doc, registry, events


def _model_covariates(args, doc, registry, months):
    """Covariate grid over ``months`` standardised as at fit time, or None."""
    from gridpv.ingest import load_covariates
    from gridpv.pipeline import covariate_grid
    info = doc.get("covariates") or {}
    cols = info.get("columns") or []
    if not cols:
        return None
    if not args.covariates:
        raise GridPVError("model uses covariates: --covariates is required")
    cov = load_covariates(_existing(args.covariates), registry)
    grid, _, _ = covariate_grid(cov, registry, cols, doc["origin"], months,
                                info["center"], info["scale"])
    return grid


def _all_months(doc, last_month):
    from gridpv.ingest import month_range
    return month_range(doc["origin"], last_month)


# -- subcommands -----------------------------------------------------------------------------

def cmd_synth(args):
    from gridpv import synth
    out = Path(args.out)
    if args.mode == "hawkes":
        spec = synth.HawkesDgp(n_subs=args.n_subs, mu=args.mu, alpha=args.alpha, beta=args.beta,
                               k_nn=args.k_nn, horizon_days=args.days, start_month=args.start_month)
        truth = synth.gen_hawkes_dataset(spec, args.seed, out)
        log.info("synthetic hawkes: %d events", truth["n_events"])
    else:
        spec = synth.PanelDgp(n_units=args.units, n_months=args.months, start_month=args.start_month,
                              zero_fraction=args.zero_fraction)
        out.mkdir(parents=True, exist_ok=True)
        df, truth = synth.gen_twopart_panel(spec, args.seed)
        _emit(args, df, out / "covariates.csv")
        synth.write_truth(truth, out / "truth.json")


def cmd_reliability(args):
    from gridpv.ingest import (assemble_panel, load_covariates, load_daily_gusts, load_events,
                               load_installs, load_registry, month_range)
    from gridpv.reliability import build_reliability_panel, filter_events, monthly_gust_totals
    registry = load_registry(_existing(args.substations))
    events = filter_events(load_events(_existing(args.events)), args.min_duration)
    window = _event_window(events, args.start, args.end)
    cov = load_covariates(_existing(args.covariates), registry) if args.covariates else None
    installs = load_installs(_existing(args.installs), registry) if args.installs else []
    panel = assemble_panel(events, registry, cov, installs, window)
    if args.gusts:
        daily = load_daily_gusts(_existing(args.gusts), registry)
        gust = monthly_gust_totals(daily, month_range(*window))
        panel = panel.drop(columns=["gust"], errors="ignore").merge(
            gust, on=["substation_id", "month"], how="left")
        if panel["gust"].isna().any():
            raise GridPVError("gust file does not cover every substation")
    out = build_reliability_panel(panel)
    _emit(args, out, args.out, window=f"{window[0]}..{window[1]}")


def cmd_fit_hawkes(args):
    from gridpv.hawkes import FitConfig, MarkSpace, fit_mle, nearest_neighbors, save_model
    from gridpv.ingest import load_covariates, load_events, load_registry, month_range
    from gridpv.pipeline import covariate_grid, events_to_arrays, month_edges
    registry = load_registry(_existing(args.substations))
    events = load_events(_existing(args.events))
    start, end = _event_window(events, args.start, args.end)
    months = month_range(start, end)
    T = float(month_edges(start, months)[-1])
    ms = MarkSpace()
    arr = events_to_arrays(events, registry, start, ms).window(0.0, T)
    if args.k_nn > len(registry):
        raise GridPVError(f"--k-nn {args.k_nn} exceeds the number of substations")
    grid, cov_info = None, {}
    if args.hawkes_covariates:
        if not args.covariates:
            raise GridPVError("--hawkes-covariates needs --covariates")
        cov = load_covariates(_existing(args.covariates), registry)
        grid, center, scale = covariate_grid(cov, registry, args.hawkes_covariates, start, months)
        cov_info = dict(columns=list(args.hawkes_covariates), center=center.tolist(),
                        scale=scale.tolist())
    fit = fit_mle(arr, T, len(registry), ms.n_marks, nearest_neighbors(registry.coords, args.k_nn),
                  grid, FitConfig(max_iter=args.max_iter, seed=args.seed,
                                  fit_trend=not args.no_trend))
    save_model(args.out, fit.params, ms, registry.ids, start, cov_info,
               dict(train_end=end, T=T, n_events=len(arr), log_likelihood=fit.log_likelihood,
                    n_iter=fit.n_iter, branching_ratio=fit.params.branching_ratio))
    log.info("fitted %d events: ll=%.6g", len(arr), fit.log_likelihood)


def _long_table(matrices, months, ids, value_name="value"):
    rows = []
    for metric, mat in matrices.items():
        n, S, K = mat.shape
        for i in range(n):
            for s in range(S):
                for k in range(K):
                    rows.append((months[i], ids[s], k, metric, mat[i, s, k]))
    return pd.DataFrame(rows, columns=["timestep", "substation", "replication", "metric", value_name])


def cmd_simulate(args):
    from gridpv.ingest import normalize_month
    from gridpv.pipeline import events_to_arrays, month_edges, months_after
    from gridpv.simulate import aggregate_ensemble, simulate_ensemble
    doc, registry, events = _load_model(args)
    train_end = doc["fit"]["train_end"]
    first = normalize_month(args.start) if args.start else months_after(train_end, 1)[0]
    before_first = str(pd.Period(first, freq="M") - 1)
    months = [first] + months_after(first, args.horizon - 1)
    all_months = _all_months(doc, months[-1])
    edges = month_edges(doc["origin"], all_months)[-len(months) - 1:]
    ms = doc["mark_space"]
    hist = events_to_arrays(events, registry, doc["origin"], ms).before(edges[0])
    if pd.Period(before_first, "M") < pd.Period(train_end, "M"):
        log.warning("simulation starts inside the training window")
    grid = _model_covariates(args, doc, registry, all_months)
    paths = simulate_ensemble(doc["params"], hist, edges, args.replications, args.seed, grid,
                              args.threads)
    agg = aggregate_ensemble(paths, registry.customers, edges, ms)
    table = _long_table({m: agg[m].values for m in agg}, months, registry.ids)
    _emit(args, table, args.out, replications=args.replications)


def cmd_forecast(args):
    from gridpv.ingest import month_range, normalize_month
    from gridpv.pipeline import (conformal_forecast, events_to_arrays, month_edges, months_after,
                                 observed_indices, yearly_trajectory)
    doc, registry, events = _load_model(args)
    origin = doc["origin"]
    obs_end = normalize_month(args.observed_end) if args.observed_end else _event_window(events, origin, None)[1]
    observed = month_range(origin, obs_end)
    if not 0 < args.calibration_fraction < 1:
        raise GridPVError("--calibration-fraction must lie in (0, 1)")
    n_cal = max(1, int(math.ceil(args.calibration_fraction * len(observed))))
    if n_cal >= len(observed):
        raise GridPVError("not enough observed months for a calibration split")
    calib = observed[-n_cal:]
    future = months_after(obs_end, args.horizon)
    all_months = observed + future
    edges = month_edges(origin, all_months)
    calib_edges = edges[len(observed) - n_cal:len(observed) + 1]
    future_edges = edges[len(observed):]
    if doc["fit"].get("T", 0.0) > calib_edges[0] + 1e-9:
        raise GridPVError(f"model was trained through {doc['fit']['train_end']}, which overlaps the "
                          f"calibration window starting {calib[0]}; refit with --end before it")
    ms = doc["mark_space"]
    arr = events_to_arrays(events, registry, origin, ms).before(future_edges[0])
    actual = observed_indices(events, registry, calib)
    grid = _model_covariates(args, doc, registry, all_months)
    alpha = args.alpha
    fc = conformal_forecast(doc["params"], ms, arr, registry.customers, calib_edges, actual,
                            future_edges, args.replications, alpha, args.seed, grid, args.threads)
    rows = []
    for metric in fc.point:
        for i, month in enumerate(future):
            for s, sid in enumerate(registry.ids):
                rows.append((month, sid, metric, fc.point[metric][i, s], fc.lower[metric][i, s],
                             fc.upper[metric][i, s], 1 - alpha))
    table = pd.DataFrame(rows, columns=["timestep", "substation", "metric", "point", "lower",
                                        "upper", "level"])
    _emit(args, table, args.out, replications=args.replications, calibration=f"{calib[0]}..{calib[-1]}")
    if args.trajectory_out:
        means = {m: fc.future[m].values.mean(axis=2) for m in ("SAIDI", "SAIFI")}
        traj = yearly_trajectory(future, means, registry.customers)
        _emit(args, traj, args.trajectory_out, point="ensemble mean")


def _panel_spec(args):
    from gridpv.econometrics import PanelSpec
    df = pd.read_csv(_existing(args.panel), comment="#", dtype={"substation_id": str, "month": str})
    if args.covariates:
        from gridpv.ingest import load_covariates
        cov = load_covariates(_existing(args.covariates))
        cov = cov[["substation_id", "month"] + [c for c in cov.columns if c not in df.columns]]
        df = df.merge(cov, on=["substation_id", "month"], how="left")
    h = args.horizon
    return PanelSpec(df, outcome=args.outcome, treatment=args.treatment or f"S_{h}",
                     frequency=args.frequency or f"F_{h}", instrument=args.instrument or f"G_{h}",
                     controls=list(args.controls))


def _ame_table(estimates):
    return pd.DataFrame([(e.variable, e.value, e.se, e.ci_low, e.ci_high, e.n_boot) for e in estimates],
                        columns=["variable", "ame", "se", "ci_low", "ci_high", "n_boot"])


def _regression_tables(fit):
    parts = [("first_stage", fit.first_stage), ("logit", fit.logit), ("glm", fit.glm)]
    long_rows, wide = [], {}
    for part, res in parts:
        if res is None:
            continue
        tab = res.table()
        for term, r in tab.iterrows():
            if str(term).startswith("fe_"):
                continue
            long_rows.append((part, term, r["coef"], r["se"], r["z"], r["p"], r["stars"]))
            wide.setdefault(term, {})[part] = f"{r['coef']:.4g}{r['stars']} ({r['se']:.3g})"
    long = pd.DataFrame(long_rows, columns=["part", "term", "coef", "se", "z", "p", "stars"])
    cols = [p for p, r in parts if r is not None]
    text = pd.DataFrame([[term] + [cells.get(p, "") for p in cols] for term, cells in wide.items()],
                        columns=["term"] + cols)
    n = {"first_stage": fit.first_stage, "logit": fit.logit, "glm": fit.glm}
    text.loc[len(text)] = ["observations"] + [str(n[p].nobs) for p in cols]
    return long, text


def cmd_twopart(args):
    from gridpv.econometrics import anderson_rubin, average_marginal_effect, fit_two_part
    spec = _panel_spec(args)
    fit = fit_two_part(spec, control_function=args.control_function)
    long, text = _regression_tables(fit)
    extra = {"n_obs": len(fit.frame), "n_clusters": fit.frame[spec.unit].nunique(),
             "fixed_effects": "substation + year-quarter"}
    if fit.first_stage is not None:
        ar, ar_p = anderson_rubin(spec, frame=fit.frame)
        extra.update(first_stage_F=fit.first_stage.f_stat, ar_stat=ar, ar_p=ar_p)
    _emit(args, long, args.out, **extra)
    if args.text_out:
        from gridpv.report import render_text
        Path(args.text_out).write_text(render_text(text, _meta(args, **extra)), encoding="utf-8")
    if args.ame_out:
        est = average_marginal_effect(fit, [spec.treatment], args.n_boot, args.seed, args.threads)
        _emit(args, _ame_table(est), args.ame_out, n_boot=args.n_boot)


def cmd_ame(args):
    from gridpv.econometrics import average_marginal_effect, fit_two_part
    spec = _panel_spec(args)
    fit = fit_two_part(spec, control_function=args.control_function)
    variables = args.variables or [spec.treatment]
    est = average_marginal_effect(fit, variables, args.n_boot, args.seed, args.threads)
    _emit(args, _ame_table(est), args.out, n_boot=args.n_boot)


def cmd_margins(args):
    from gridpv.econometrics import fit_two_part, predictive_margins
    spec = _panel_spec(args)
    fit = fit_two_part(spec, control_function=args.control_function)
    table = predictive_margins(fit, args.variable, args.grid, args.n_boot, args.seed, args.threads)
    table.insert(0, "variable", args.variable)
    _emit(args, table, args.out, n_boot=args.n_boot)


def cmd_vif(args):
    from gridpv.econometrics import vif
    df = pd.read_csv(_existing(args.panel), comment="#")
    missing = [c for c in args.columns if c not in df.columns]
    if missing:
        raise GridPVError(f"panel lacks columns {missing}")
    values = vif(df[args.columns].dropna())
    _emit(args, pd.DataFrame({"variable": values.index, "vif": values.to_numpy()}), args.out)


def cmd_baseline_var(args):
    from gridpv.baselines import var_comparison
    from gridpv.pipeline import events_to_arrays, month_edges, rolling_hawkes_forecast
    df = pd.read_csv(_existing(args.panel), comment="#", dtype={"substation_id": str, "month": str})
    need = ["substation_id", "month", "saidi", "saifi", "caidi"]
    missing = [c for c in need if c not in df.columns]
    if missing:
        raise GridPVError(f"panel lacks columns {missing}")
    months = sorted(df["month"].unique())
    ids = list(dict.fromkeys(df["substation_id"]))
    actual = {}
    for col, metric in (("saidi", "SAIDI"), ("saifi", "SAIFI"), ("caidi", "CAIDI")):
        wide = df.pivot(index="month", columns="substation_id", values=col).reindex(index=months, columns=ids)
        if wide.isna().any(axis=None):
            raise GridPVError("panel is not balanced")
        actual[metric] = wide.to_numpy(dtype=float)
    if args.train_months >= len(months):
        raise GridPVError("--train-months leaves no test months")
    others = {}
    if args.model:
        if not (args.events and args.substations):
            raise GridPVError("--model needs --events and --substations")
        doc, registry, events = _load_model(args)
        if list(registry.ids) != ids:
            raise GridPVError("panel substations do not match the model")
        all_months = _all_months(doc, months[-1])
        edges_all = month_edges(doc["origin"], all_months)
        offset = all_months.index(months[args.train_months])
        edges = edges_all[offset:]
        if doc["fit"].get("T", 0.0) > edges[0] + 1e-9:
            raise GridPVError("model training window overlaps the test months")
        arr = events_to_arrays(events, registry, doc["origin"], doc["mark_space"])
        grid = _model_covariates(args, doc, registry, all_months)
        others["Hawkes"] = rolling_hawkes_forecast(doc["params"], doc["mark_space"], arr,
                                                   registry.customers, edges, args.replications,
                                                   args.seed, grid)
    table = var_comparison(actual, args.train_months, args.lags, others)
    _emit(args, table, args.out, normalization=args.normalization,
          train=f"{months[0]}..{months[args.train_months - 1]}",
          test=f"{months[args.train_months]}..{months[-1]}")


def cmd_scenario(args):
    from gridpv.scenario import ScenarioInput, outage_adjusted_installs, scenario_table
    traj = pd.read_csv(_existing(args.trajectory, "trajectory"), comment="#")
    for col in ("year", "saidi_minutes"):
        if col not in traj.columns:
            raise GridPVError(f"{args.trajectory}: missing column {col!r}")
    inp = ScenarioInput(traj["saidi_minutes"].to_numpy(dtype=float), args.baseline_rate,
                        args.households, args.years, args.ame_per_hour, args.baseline_saidi,
                        traj["year"].tolist())
    table = scenario_table(inp)
    count, reduction = outage_adjusted_installs(inp)
    _emit(args, table, args.out, years=f"{args.years} yearly steps", total_installs=count,
          counterfactual_installs=float(table["counterfactual_cumulative"].iloc[-1]),
          reduction=reduction)


COMMANDS = {
    "synth": cmd_synth, "reliability": cmd_reliability, "fit-hawkes": cmd_fit_hawkes,
    "simulate": cmd_simulate, "forecast": cmd_forecast, "twopart": cmd_twopart, "ame": cmd_ame,
    "margins": cmd_margins, "vif": cmd_vif, "baseline-var": cmd_baseline_var, "scenario": cmd_scenario,
}


def _setup_logging():
    level = os.environ.get("GRIDPV_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:            # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"gridpv: error: {exc}", file=sys.stderr)
        return 2
    except GridPVError as exc:
        print(f"gridpv: error: {exc}", file=sys.stderr)
        return 1
    try:
        COMMANDS[args.command](args)
    except GridPVError as exc:
        print(f"gridpv: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"gridpv: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
