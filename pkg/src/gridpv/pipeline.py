"""Glue between the tables on disk and the Hawkes / conformal machinery.

Time origin is the first day of a month; windows are calendar months
expressed in days since that origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from gridpv import GridPVError
from gridpv.conformal import nonconformity_scores, prediction_interval, substation_quantiles
from gridpv.hawkes import CovariateGrid, EventArrays, HawkesParams, MarkSpace
from gridpv.ingest import OutageEvent, SubstationRegistry, assemble_panel, month_start
from gridpv.simulate import METRICS, aggregate_ensemble, aggregate_indices, simulate_ensemble


def month_edges(origin: str, months: Sequence[str]) -> np.ndarray:
    """Day offsets of the first day of each month plus the end of the last one."""
    t0 = month_start(origin)
    last = pd.Period(months[-1], freq="M") + 1
    starts = [month_start(m) for m in months] + [month_start(str(last))]
    return np.array([(s - t0).total_seconds() / 86400.0 for s in starts])


def months_after(month: str, n: int) -> list[str]:
    p = pd.Period(month, freq="M")
    return [str(p + i) for i in range(1, n + 1)]


def events_to_arrays(events: Sequence[OutageEvent], registry: SubstationRegistry, origin: str,
                     mark_space: MarkSpace) -> EventArrays:
    t0 = month_start(origin)
    if not events:
        return EventArrays.empty()
    times = np.array([(e.start - t0).total_seconds() / 86400.0 for e in events])
    subs = np.array([registry.index(e.substation_id) for e in events])
    marks = mark_space.classify([e.duration_minutes for e in events],
                                [e.customers_affected for e in events])
    order = np.argsort(times, kind="stable")
    return EventArrays(times[order], subs[order], marks[order])


def observed_indices(events: Sequence[OutageEvent], registry: SubstationRegistry,
                     months: Sequence[str]) -> dict[str, np.ndarray]:
    """Observed SAIDI/SAIFI/CAIDI as (n_months, n_substations) matrices."""
    panel = assemble_panel(events, registry, None, [], (months[0], months[-1]))
    n, S = len(months), len(registry)
    cm = panel["customer_minutes"].to_numpy().reshape(S, n).T
    ci = panel["customers_interrupted"].to_numpy().reshape(S, n).T
    cust = registry.customers
    saidi = cm / cust
    saifi = ci / cust
    caidi = np.zeros_like(saidi)
    nz = saifi > 0
    caidi[nz] = saidi[nz] / saifi[nz]
    return {"SAIDI": saidi, "SAIFI": saifi, "CAIDI": caidi}


def covariate_grid(cov: pd.DataFrame, registry: SubstationRegistry, columns: Sequence[str],
                   origin: str, months: Sequence[str], center=None, scale=None):
    """Standardised monthly covariates as a CovariateGrid (plus the mean/sd used)."""
    cov = cov.set_index(["substation_id", "month"])
    missing = [c for c in columns if c not in cov.columns]
    if missing:
        raise GridPVError(f"covariates file lacks columns {missing}")
    values = np.empty((len(months), len(registry), len(columns)))
    for si, sid in enumerate(registry.ids):
        for mi, m in enumerate(months):
            if (sid, m) not in cov.index:
                raise GridPVError(f"covariates missing for {sid} {m}")
            values[mi, si] = cov.loc[(sid, m), list(columns)].to_numpy(dtype=float)
    if center is None:
        center = values.reshape(-1, len(columns)).mean(axis=0)
        scale = values.reshape(-1, len(columns)).std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    values = (values - np.asarray(center)) / np.asarray(scale)
    return CovariateGrid(month_edges(origin, months), values), np.asarray(center), np.asarray(scale)


@dataclass
class ConformalForecast:
    residuals: dict            # metric -> (n_cal, S)
    quantiles: dict            # metric -> (S,)
    future: dict               # metric -> IndexMatrix over future windows
    point: dict                # metric -> (m, S)
    lower: dict
    upper: dict
    alpha: float


def conformal_forecast(params: HawkesParams, mark_space: MarkSpace, history: EventArrays,
                       customers, calib_edges: np.ndarray, calib_actual: dict,
                       future_edges: np.ndarray, K: int, alpha: float, seed: int,
                       covariates: Optional[CovariateGrid] = None, threads: int = 1,
                       metrics: Sequence[str] = METRICS) -> ConformalForecast:
    """Calibrate on the held-out windows, then form intervals for the future windows.

    Calibration paths start from the history before ``calib_edges[0]``; future
    paths start from the full ``history`` before ``future_edges[0]``.
    """
    cal_hist = history.before(calib_edges[0])
    cal_paths = simulate_ensemble(params, cal_hist, calib_edges, K, seed, covariates, threads,
                                  stream=0)
    cal = aggregate_ensemble(cal_paths, customers, calib_edges, mark_space)
    fut_hist = history.before(future_edges[0])
    fut_paths = simulate_ensemble(params, fut_hist, future_edges, K, seed, covariates, threads,
                                  stream=1)
    fut = aggregate_ensemble(fut_paths, customers, future_edges, mark_space)
    res, qs, pt, lo, hi = {}, {}, {}, {}, {}
    for m in metrics:
        res[m] = nonconformity_scores(cal[m].values, calib_actual[m])
        qs[m] = substation_quantiles(res[m], alpha)
        pt[m], lo[m], hi[m] = prediction_interval(fut[m].values, qs[m], alpha)
    return ConformalForecast(res, qs, {m: fut[m] for m in metrics}, pt, lo, hi, alpha)


def rolling_hawkes_forecast(params: HawkesParams, mark_space: MarkSpace, events: EventArrays,
                            customers, edges: np.ndarray, K: int, seed: int,
                            covariates: Optional[CovariateGrid] = None) -> dict[str, np.ndarray]:
    """One-window-ahead ensemble-mean forecasts, each conditioned on the observed
    events before its window. Returns metric -> (len(edges) - 1, S)."""
    out = {m: [] for m in METRICS}
    for i in range(len(edges) - 1):
        hist = events.before(edges[i])
        w = edges[i:i + 2]
        paths = simulate_ensemble(params, hist, w, K, seed, covariates, stream=i)
        agg = aggregate_ensemble(paths, customers, w, mark_space)
        for m in METRICS:
            out[m].append(agg[m].values[0].mean(axis=1))
    return {m: np.array(v) for m, v in out.items()}


def yearly_trajectory(months: Sequence[str], matrices: dict, customers) -> pd.DataFrame:
    """System-level yearly SAIDI/SAIFI (customer-weighted sums of monthly values)."""
    customers = np.asarray(customers, dtype=float)
    years = np.array([int(m[:4]) for m in months])
    rows = []
    for y in sorted(set(years)):
        sel = years == y
        saidi = float((matrices["SAIDI"][sel] * customers).sum() / customers.sum())
        saifi = float((matrices["SAIFI"][sel] * customers).sum() / customers.sum())
        rows.append((y, saidi, saifi, int(sel.sum())))
    return pd.DataFrame(rows, columns=["year", "saidi_minutes", "saifi", "months"])
