"""SAIDI / SAIFI / CAIDI, rolling treatment sums, gust exposure and adoption rates.

Durations are whole minutes and customer counts are integers, so the
numerators below are exact integers; each index is one division by N_T.
"""

from __future__ import annotations

from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from gridpv import GridPVError
from gridpv.ingest import OutageEvent, SubstationRegistry

HORIZONS = (3, 6, 9, 12)


def _check_customers(customers_total):
    if customers_total < 1:
        raise GridPVError(f"customers_total must be >= 1, got {customers_total}")


def compute_saidi(events: Iterable[OutageEvent], customers_total: int) -> float:
    """Customer-minutes of interruption per served customer.

    Major-event days are not excluded.
    """
    _check_customers(customers_total)
    return sum(e.duration_minutes * e.customers_affected for e in events) / customers_total


def compute_saifi(events: Iterable[OutageEvent], customers_total: int) -> float:
    _check_customers(customers_total)
    return sum(e.customers_affected for e in events) / customers_total


def compute_caidi(saidi: float, saifi: float) -> float:
    """Minutes per interruption. Zero when both indices are zero."""
    if saifi < 0:
        raise GridPVError("saifi must be >= 0")
    if saifi == 0:
        if saidi == 0:
            return 0.0
        raise GridPVError("CAIDI undefined: saifi is 0 while saidi > 0")
    return saidi / saifi


def filter_events(events: Iterable[OutageEvent], min_duration: float) -> list[OutageEvent]:
    """Keep events lasting at least ``min_duration`` minutes."""
    if min_duration < 0:
        raise GridPVError("min_duration must be >= 0")
    return [e for e in events if e.duration_minutes >= min_duration]


def rolling_sum(series: Sequence[float], h: int) -> np.ndarray:
    """Trailing h-month sums; entries without h months of history are NaN."""
    values = np.asarray(series, dtype=float)
    if h < 1:
        raise GridPVError("h must be >= 1")
    if h > len(values):
        raise GridPVError(f"h={h} exceeds series length {len(values)}")
    csum = np.concatenate([[0.0], np.cumsum(values)])
    out = np.full(len(values), np.nan)
    out[h - 1:] = csum[h:] - csum[:-h]
    # cumsum differencing can leave round-off on integer-valued input
    if np.all(values == np.round(values)):
        out[h - 1:] = np.round(out[h - 1:])
    return out


def gust_exposure(daily_max_gusts: pd.Series, start: date, end: date) -> float:
    """Sum of daily maximum gusts over the days in ``[start, end)`` (m/s * days).

    ``daily_max_gusts`` is indexed by calendar date. Every day in the window
    must be present.
    """
    n_days = (end - start).days
    if n_days <= 0:
        return 0.0
    days = [start + timedelta(days=i) for i in range(n_days)]
    missing = [d for d in days if d not in daily_max_gusts.index]
    if missing:
        raise GridPVError(f"gust series missing {len(missing)} day(s) in window, first {missing[0]}")
    return float(daily_max_gusts.loc[days].sum())


def monthly_gust_totals(daily: pd.DataFrame, months: Sequence[str]) -> pd.DataFrame:
    """Per (substation, month) sum of daily maxima, from a daily gust table."""
    rows = []
    for sid, grp in daily.groupby("substation_id", sort=False):
        series = grp.set_index("date")["max_gust"]
        for m in months:
            p = pd.Period(m, freq="M")
            start = date(p.year, p.month, 1)
            end = (p + 1).start_time.date()
            rows.append((sid, m, gust_exposure(series, start, end)))
    return pd.DataFrame(rows, columns=["substation_id", "month", "gust"])


def adoption_rate(installs_3m: int, customers_total: int) -> float:
    _check_customers(customers_total)
    return installs_3m / customers_total


def build_reliability_panel(panel: pd.DataFrame, horizons: Sequence[int] = HORIZONS,
                            gust_column: str = "gust") -> pd.DataFrame:
    """Add reliability indices, rolling sums and the adoption rate to an assembled panel.

    ``panel`` is the output of :func:`gridpv.ingest.assemble_panel`. Adds
    ``saidi, saifi, caidi``, ``S_h, F_h`` (and ``G_h`` when ``gust_column`` is
    present) for every h, ``installs_3m`` and ``Y``. Leading months without a
    full window are left as NaN.
    """
    df = panel.copy()
    nt = df["customers_total"].to_numpy()
    if (nt < 1).any():
        raise GridPVError("customers_total must be >= 1")
    df["saidi"] = df["customer_minutes"].to_numpy() / nt
    df["saifi"] = df["customers_interrupted"].to_numpy() / nt
    df["caidi"] = [compute_caidi(a, b) for a, b in zip(df["saidi"], df["saifi"])]

    has_gust = gust_column in df.columns

    def roll(values, h):
        # windows longer than the panel have no complete entries
        return rolling_sum(values, h) if h <= len(values) else np.full(len(values), np.nan)

    pieces = []
    for _, grp in df.groupby("substation_id", sort=False):
        grp = grp.sort_values("month").copy()
        for h in horizons:
            grp[f"S_{h}"] = roll(grp["saidi"], h)
            grp[f"F_{h}"] = roll(grp["saifi"], h)
            if has_gust:
                grp[f"G_{h}"] = roll(grp[gust_column], h)
        grp["installs_3m"] = roll(grp["installs"], 3)
        grp["Y"] = grp["installs_3m"] / grp["customers_total"]
        pieces.append(grp)
    return pd.concat(pieces).reset_index(drop=True)
