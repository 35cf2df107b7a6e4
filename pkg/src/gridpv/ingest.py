"""Loaders and panel assembly for outage events, substations, covariates and installs.

All tables are UTF-8 CSV with a header row:

    events.csv       event_id,substation_id,start,end,customers_affected,cause
    substations.csv  substation_id,lon,lat,customers_total
    covariates.csv   substation_id,month,<numeric columns...>
    installs.csv     household_id,substation_id,date

Timestamps are ISO-8601 and interpreted as UTC when no offset is given.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from gridpv import IngestError

EVENT_COLUMNS = ["event_id", "substation_id", "start", "end", "customers_affected", "cause"]
REGISTRY_COLUMNS = ["substation_id", "lon", "lat", "customers_total"]
INSTALL_COLUMNS = ["household_id", "substation_id", "date"]

_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass(frozen=True)
class OutageEvent:
    event_id: str
    substation_id: str
    start: datetime
    end: datetime
    customers_affected: int
    cause: Optional[str] = None

    def __post_init__(self):
        if self.end < self.start:
            raise IngestError(f"event {self.event_id}: end precedes start")
        if self.customers_affected < 1:
            raise IngestError(f"event {self.event_id}: customers_affected must be >= 1")

    @property
    def duration_minutes(self) -> int:
        """Whole minutes between start and end; partial minutes are dropped."""
        return int((self.end - self.start).total_seconds() // 60)

    @property
    def month(self) -> str:
        return f"{self.start.year:04d}-{self.start.month:02d}"


@dataclass(frozen=True)
class SubstationRecord:
    substation_id: str
    lon: float
    lat: float
    customers_total: int


@dataclass(frozen=True)
class InstallRecord:
    household_id: str
    substation_id: str
    date: date

    @property
    def month(self) -> str:
        return f"{self.date.year:04d}-{self.date.month:02d}"


class SubstationRegistry:
    """Ordered mapping from substation id to its record."""

    def __init__(self, records: Iterable[SubstationRecord]):
        self._records: dict[str, SubstationRecord] = {}
        for rec in records:
            if rec.substation_id in self._records:
                raise IngestError(f"duplicate substation id {rec.substation_id!r}")
            if rec.customers_total < 1:
                raise IngestError(f"substation {rec.substation_id!r}: customers_total must be >= 1")
            if not (math.isfinite(rec.lon) and math.isfinite(rec.lat)):
                raise IngestError(f"substation {rec.substation_id!r}: non-finite coordinates")
            self._records[rec.substation_id] = rec
        if not self._records:
            raise IngestError("no substations")

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records.values())

    def __contains__(self, sid):
        return sid in self._records

    def __getitem__(self, sid) -> SubstationRecord:
        try:
            return self._records[sid]
        except KeyError:
            raise IngestError(f"unknown substation {sid!r}") from None

    @property
    def ids(self) -> list[str]:
        return list(self._records)

    def index(self, sid: str) -> int:
        try:
            return self.ids.index(sid)
        except ValueError:
            raise IngestError(f"unknown substation {sid!r}") from None

    @property
    def customers(self) -> np.ndarray:
        return np.array([r.customers_total for r in self._records.values()], dtype=np.int64)

    @property
    def coords(self) -> np.ndarray:
        """(n, 2) array of (lon, lat) in degrees."""
        return np.array([[r.lon, r.lat] for r in self._records.values()], dtype=float)

    @property
    def total_customers(self) -> int:
        return int(self.customers.sum())


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(_TS_FORMAT)


def _read_rows(path, required: Sequence[str]) -> list[tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise IngestError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        # line 1 is the header
        return [(i + 2, row) for i, row in enumerate(reader)]


def load_events(path) -> list[OutageEvent]:
    """Parse an events CSV. Any bad row rejects the whole file.

    Returns events sorted by start time (ties keep file order).
    """
    rows = _read_rows(path, EVENT_COLUMNS[:5])
    events = []
    seen = set()
    for lineno, row in rows:
        try:
            eid = row["event_id"].strip()
            if not eid:
                raise ValueError("empty event_id")
            if eid in seen:
                raise ValueError(f"duplicate event_id {eid!r}")
            start = parse_timestamp(row["start"])
            end = parse_timestamp(row["end"])
            if end < start:
                raise ValueError("end precedes start")
            customers = int(row["customers_affected"])
            if customers < 1:
                raise ValueError("customers_affected must be >= 1")
            cause = (row.get("cause") or "").strip() or None
        except (ValueError, TypeError) as exc:
            raise IngestError(f"{path}: row {lineno}: {exc}") from None
        seen.add(eid)
        events.append(OutageEvent(eid, row["substation_id"].strip(), start, end, customers, cause))
    events.sort(key=lambda e: e.start)
    return events


def write_events(events: Iterable[OutageEvent], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for e in events:
            w.writerow([e.event_id, e.substation_id, format_timestamp(e.start),
                        format_timestamp(e.end), e.customers_affected, e.cause or ""])


def load_registry(path) -> SubstationRegistry:
    rows = _read_rows(path, REGISTRY_COLUMNS)
    records = []
    for lineno, row in rows:
        try:
            records.append(SubstationRecord(
                row["substation_id"].strip(),
                float(row["lon"]),
                float(row["lat"]),
                int(row["customers_total"]),
            ))
        except ValueError as exc:
            raise IngestError(f"{path}: row {lineno}: {exc}") from None
    try:
        return SubstationRegistry(records)
    except IngestError as exc:
        raise IngestError(f"{path}: {exc}") from None


def write_registry(registry: SubstationRegistry, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGISTRY_COLUMNS)
        for r in registry:
            w.writerow([r.substation_id, repr(r.lon), repr(r.lat), r.customers_total])


def load_installs(path, registry: Optional[SubstationRegistry] = None,
                  window: Optional[tuple[str, str]] = None) -> list[InstallRecord]:
    rows = _read_rows(path, INSTALL_COLUMNS)
    months = set(month_range(*window)) if window else None
    out = []
    for lineno, row in rows:
        try:
            rec = InstallRecord(row["household_id"].strip(), row["substation_id"].strip(),
                                date.fromisoformat(row["date"].strip()))
        except ValueError as exc:
            raise IngestError(f"{path}: row {lineno}: {exc}") from None
        if registry is not None and rec.substation_id not in registry:
            raise IngestError(f"{path}: row {lineno}: unknown substation {rec.substation_id!r}")
        if months is not None and rec.month not in months:
            raise IngestError(f"{path}: row {lineno}: date {rec.date} outside study window")
        out.append(rec)
    return out


def load_covariates(path, registry: Optional[SubstationRegistry] = None) -> pd.DataFrame:
    """Monthly covariate panel keyed by (substation_id, month).

    Extra columns are kept as-is. Empty or non-finite numeric cells are errors;
    nothing is imputed.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"file not found: {path}")
    df = pd.read_csv(path, dtype={"substation_id": str, "month": str}, keep_default_na=False,
                     na_values=[])
    for col in ("substation_id", "month"):
        if col not in df.columns:
            raise IngestError(f"{path}: missing column {col!r}")
    df["month"] = df["month"].map(normalize_month)
    dup = df.duplicated(["substation_id", "month"])
    if dup.any():
        first = int(np.flatnonzero(dup.to_numpy())[0]) + 2
        raise IngestError(f"{path}: row {first}: duplicate (substation_id, month) key")
    if registry is not None:
        unknown = sorted(set(df["substation_id"]) - set(registry.ids))
        if unknown:
            raise IngestError(f"{path}: unknown substations {unknown}")
    for col in df.columns:
        if col in ("substation_id", "month"):
            continue
        values = pd.to_numeric(df[col], errors="coerce")
        bad = ~np.isfinite(values.to_numpy(dtype=float))
        if bad.any():
            first = int(np.flatnonzero(bad)[0]) + 2
            raise IngestError(f"{path}: row {first}: column {col!r} is missing or non-numeric")
        df[col] = values
    return df


def normalize_month(text: str) -> str:
    """'2014-1', '2014-01' or '2014-01-15' -> '2014-01'."""
    try:
        p = pd.Period(str(text).strip()[:7], freq="M")
    except (ValueError, TypeError):
        raise IngestError(f"bad month {text!r}") from None
    return str(p)


def month_range(start: str, end: str) -> list[str]:
    """Inclusive list of 'YYYY-MM' months from start to end."""
    start, end = normalize_month(start), normalize_month(end)
    months = [str(p) for p in pd.period_range(start, end, freq="M")]
    if not months:
        raise IngestError(f"empty window {start}..{end}")
    return months


def month_start(month: str) -> datetime:
    p = pd.Period(month, freq="M")
    return datetime(p.year, p.month, 1, tzinfo=timezone.utc)


def assemble_panel(events: Sequence[OutageEvent], registry: SubstationRegistry,
                   covariates: Optional[pd.DataFrame], installs: Sequence[InstallRecord],
                   window: tuple[str, str]) -> pd.DataFrame:
    """Balanced substation x month panel over ``window`` (inclusive month pair).

    Outage columns hold integer sums so that reliability indices can be formed
    exactly: ``n_events``, ``customers_interrupted`` (sum of N_i) and
    ``customer_minutes`` (sum of U_i * N_i). An event belongs entirely to the
    month in which it starts. Events starting outside the window are ignored.
    """
    months = month_range(*window)
    month_set = set(months)
    for e in events:
        if e.substation_id not in registry:
            raise IngestError(f"event {e.event_id}: unknown substation {e.substation_id!r}")

    ids = registry.ids
    grid = pd.MultiIndex.from_product([ids, months], names=["substation_id", "month"])
    out = pd.DataFrame(index=grid)
    out["customers_total"] = np.repeat(registry.customers, len(months))

    counts = {}
    for e in events:
        if e.month not in month_set:
            continue
        key = (e.substation_id, e.month)
        n, cust, cm = counts.get(key, (0, 0, 0))
        counts[key] = (n + 1, cust + e.customers_affected,
                       cm + e.duration_minutes * e.customers_affected)
    cols = np.zeros((len(grid), 3), dtype=np.int64)
    for key, vals in counts.items():
        cols[grid.get_loc(key)] = vals
    out["n_events"] = cols[:, 0]
    out["customers_interrupted"] = cols[:, 1]
    out["customer_minutes"] = cols[:, 2]

    inst = np.zeros(len(grid), dtype=np.int64)
    for rec in installs:
        if rec.substation_id not in registry:
            raise IngestError(f"install {rec.household_id}: unknown substation {rec.substation_id!r}")
        if rec.month in month_set:
            inst[grid.get_loc((rec.substation_id, rec.month))] += 1
    out["installs"] = inst

    out = out.reset_index()
    if covariates is not None and len(covariates.columns) > 2:
        cov = covariates.set_index(["substation_id", "month"])
        cov = cov[[c for c in cov.columns if c not in out.columns]]
        joined = out.join(cov, on=["substation_id", "month"], how="left")
        if cov.shape[1] and joined[cov.columns].isna().any(axis=None):
            row = joined[joined[cov.columns].isna().any(axis=1)].iloc[0]
            raise IngestError(
                f"covariates missing for substation {row['substation_id']!r} month {row['month']}")
        out = joined
    return out


def load_daily_gusts(path, registry: Optional[SubstationRegistry] = None) -> pd.DataFrame:
    """Daily maximum gust per substation: columns substation_id, date, max_gust (m/s)."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"file not found: {path}")
    df = pd.read_csv(path, dtype={"substation_id": str, "date": str})
    for col in ("substation_id", "date", "max_gust"):
        if col not in df.columns:
            raise IngestError(f"{path}: missing column {col!r}")
    df["date"] = pd.to_datetime(df["date"]).dt.date
    if df.duplicated(["substation_id", "date"]).any():
        raise IngestError(f"{path}: duplicate (substation_id, date) rows")
    if not np.isfinite(df["max_gust"].to_numpy(dtype=float)).all():
        raise IngestError(f"{path}: non-finite max_gust")
    if registry is not None:
        unknown = sorted(set(df["substation_id"]) - set(registry.ids))
        if unknown:
            raise IngestError(f"{path}: unknown substations {unknown}")
    return df
