import csv

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from gridpv import IngestError
from gridpv.hawkes import MarkSpace
from gridpv.ingest import (SubstationRecord, SubstationRegistry, assemble_panel, load_covariates,
                           load_events, load_installs, load_registry, month_range, parse_timestamp,
                           write_events, write_registry)
from gridpv.synth import HawkesDgp, arrays_to_events, simulate_hawkes_events
from gridpv.ingest import month_start

from conftest import make_event, make_registry


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


EV_HEADER = ["event_id", "substation_id", "start", "end", "customers_affected", "cause"]


def test_single_row_parses(tmp_path):
    p = _write(tmp_path / "e.csv", EV_HEADER,
               [["e1", "A", "2014-03-01T10:00:00Z", "2014-03-01T11:00:00Z", "50", "tree"]])
    events = load_events(p)
    assert len(events) == 1
    assert events[0].duration_minutes == 60
    assert events[0].customers_affected == 50
    assert events[0].month == "2014-03"


def test_end_before_start_names_row(tmp_path):
    p = _write(tmp_path / "e.csv", EV_HEADER,
               [["e1", "A", "2014-03-01T10:00:00Z", "2014-03-01T11:00:00Z", "50", ""],
                ["e2", "A", "2014-03-02T10:00:00Z", "2014-03-02T09:00:00Z", "50", ""]])
    with pytest.raises(IngestError, match="row 3"):
        load_events(p)


@pytest.mark.parametrize("field,value,msg", [
    ("start", "not-a-time", "row 2"),
    ("customers_affected", "0", "customers_affected"),
    ("customers_affected", "x", "row 2"),
])
def test_bad_cells_rejected(tmp_path, field, value, msg):
    row = dict(zip(EV_HEADER, ["e1", "A", "2014-03-01T10:00:00Z", "2014-03-01T11:00:00Z", "5", ""]))
    row[field] = value
    p = _write(tmp_path / "e.csv", EV_HEADER, [[row[c] for c in EV_HEADER]])
    with pytest.raises(IngestError, match=msg):
        load_events(p)


def test_duplicate_event_id(tmp_path):
    r = ["e1", "A", "2014-03-01T10:00:00Z", "2014-03-01T11:00:00Z", "5", ""]
    p = _write(tmp_path / "e.csv", EV_HEADER, [r, r])
    with pytest.raises(IngestError, match="duplicate"):
        load_events(p)


def test_missing_file_and_columns(tmp_path):
    with pytest.raises(IngestError, match="not found"):
        load_events(tmp_path / "nope.csv")
    p = _write(tmp_path / "e.csv", ["event_id", "start"], [])
    with pytest.raises(IngestError, match="missing columns"):
        load_events(p)


def test_timestamps_normalised_to_utc():
    a = parse_timestamp("2014-03-01T10:00:00Z")
    b = parse_timestamp("2014-03-01T05:00:00-05:00")
    c = parse_timestamp("2014-03-01T10:00:00")
    assert a == b == c


def test_synthetic_round_trip_is_byte_identical(tmp_path):
    spec = HawkesDgp(n_subs=5, mu=0.6, alpha=0.3, horizon_days=365)
    ms = MarkSpace()
    registry, _, arr = simulate_hawkes_events(spec, 11, ms)
    events = arrays_to_events(arr, registry, month_start(spec.start_month), ms)[:1000]
    assert len(events) == 1000
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_events(events, p1)
    loaded = load_events(p1)
    assert loaded == sorted(events, key=lambda e: e.start)
    write_events(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_registry_full_scale(tmp_path):
    rng = np.random.default_rng(0)
    cust = rng.multinomial(377_726 - 44 * 6000, np.ones(44) / 44) + 6000
    reg = SubstationRegistry(SubstationRecord(f"S{i}", -86.0, 39.7 + i * 1e-3, int(n))
                             for i, n in enumerate(cust))
    write_registry(reg, tmp_path / "s.csv")
    loaded = load_registry(tmp_path / "s.csv")
    assert len(loaded) == 44
    assert loaded.total_customers == 377_726
    assert abs(loaded.customers.mean() - 8600) < 50


def test_registry_errors(tmp_path):
    p = _write(tmp_path / "s.csv", ["substation_id", "lon", "lat", "customers_total"], [])
    with pytest.raises(IngestError, match="no substations"):
        load_registry(p)
    p = _write(tmp_path / "s.csv", ["substation_id", "lon", "lat", "customers_total"],
               [["A", "1", "2", "10"], ["A", "1", "2", "10"]])
    with pytest.raises(IngestError, match="duplicate"):
        load_registry(p)
    with pytest.raises(IngestError):
        make_registry((0,))


def test_month_range():
    assert month_range("2014-11", "2015-02") == ["2014-11", "2014-12", "2015-01", "2015-02"]
    with pytest.raises(IngestError):
        month_range("2015-02", "2014-11")


def test_panel_zero_case(registry):
    panel = assemble_panel([], make_registry((100, 200)), None, [], ("2014-01", "2014-03"))
    assert len(panel) == 6
    for col in ("n_events", "customers_interrupted", "customer_minutes", "installs"):
        assert (panel[col] == 0).all()


def test_panel_single_event_cell():
    reg = make_registry((100, 200))
    ev = make_event(1, "A", 60, 50, day=40)        # 2014-02-10
    panel = assemble_panel([ev], reg, None, [], ("2014-01", "2014-03"))
    nz = panel[panel["customer_minutes"] > 0]
    assert list(zip(nz["substation_id"], nz["month"])) == [("A", "2014-02")]
    assert nz["customer_minutes"].iloc[0] == 3000
    assert nz["customers_interrupted"].iloc[0] == 50
    assert nz["n_events"].iloc[0] == 1


def test_event_attributed_to_start_month():
    reg = make_registry((100,))
    ev = make_event(1, "A", minutes=3 * 24 * 60, day=29.5)   # spans Jan -> Feb
    panel = assemble_panel([ev], reg, None, [], ("2014-01", "2014-02"))
    assert panel["n_events"].tolist() == [1, 0]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 14), st.lists(st.tuples(st.integers(0, 5),
                                                                st.floats(0, 400)), max_size=30))
def test_panel_row_count(n_subs, n_months, raw):
    reg = make_registry(tuple(range(100, 100 + n_subs)))
    events = [make_event(i, reg.ids[s % n_subs], day=d) for i, (s, d) in enumerate(raw)]
    end = str(pd.Period("2014-01", "M") + n_months - 1)
    panel = assemble_panel(events, reg, None, [], ("2014-01", end))
    assert len(panel) == n_subs * n_months
    inside = sum(1 for e in events if e.month <= end)
    assert panel["n_events"].sum() == inside


def test_covariates_join_and_missing(tmp_path, registry):
    p = _write(tmp_path / "c.csv", ["substation_id", "month", "gust"],
               [["A", "2014-01", "1.5"], ["B", "2014-01", "2.5"], ["A", "2014-02", "3"]])
    cov = load_covariates(p, registry)
    with pytest.raises(IngestError, match="covariates missing"):
        assemble_panel([], registry, cov, [], ("2014-01", "2014-02"))
    panel = assemble_panel([], registry, cov, [], ("2014-01", "2014-01"))
    assert panel["gust"].tolist() == [1.5, 2.5]
    bad = _write(tmp_path / "d.csv", ["substation_id", "month", "gust"], [["A", "2014-01", ""]])
    with pytest.raises(IngestError, match="row 2"):
        load_covariates(bad)


def test_installs(tmp_path, registry):
    p = _write(tmp_path / "i.csv", ["household_id", "substation_id", "date"],
               [["h1", "A", "2014-01-05"], ["h2", "A", "2014-01-20"], ["h3", "B", "2014-02-01"]])
    inst = load_installs(p, registry, ("2014-01", "2014-02"))
    panel = assemble_panel([], registry, None, inst, ("2014-01", "2014-02"))
    assert panel["installs"].tolist() == [2, 0, 0, 1]
    with pytest.raises(IngestError, match="outside"):
        load_installs(p, registry, ("2014-01", "2014-01"))
