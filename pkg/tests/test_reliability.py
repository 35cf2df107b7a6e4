from datetime import date

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from gridpv import GridPVError
from gridpv.ingest import assemble_panel
from gridpv.reliability import (adoption_rate, build_reliability_panel, compute_caidi,
                                compute_saidi, compute_saifi, filter_events, gust_exposure,
                                monthly_gust_totals, rolling_sum)

from conftest import make_event, make_registry


def test_saidi_examples():
    assert compute_saidi([make_event(1, minutes=60, customers=50)], 100) == 30.0
    assert compute_saidi([], 100) == 0.0
    evs = [make_event(1, minutes=60, customers=50), make_event(2, minutes=120, customers=10)]
    assert compute_saidi(evs, 100) == 42.0


def test_saifi_examples():
    assert compute_saifi([make_event(1, customers=50)], 100) == 0.5
    assert compute_saifi([], 100) == 0.0
    assert compute_saifi([make_event(1, customers=50), make_event(2, customers=100)], 100) == 1.5


def test_caidi_examples():
    assert compute_caidi(30, 0.5) == 60.0
    assert compute_caidi(0, 0) == 0.0
    with pytest.raises(GridPVError):
        compute_caidi(10, 0)


def test_customers_total_validated():
    with pytest.raises(GridPVError):
        compute_saidi([], 0)


def test_partial_minutes_truncated():
    from datetime import timedelta
    e = make_event(1, minutes=0, customers=10)
    e = type(e)("x", "A", e.start, e.start + timedelta(seconds=119), 10)
    assert compute_saidi([e], 10) == 1.0


def test_filter_events():
    evs = [make_event(1, minutes=30), make_event(2, minutes=90)]
    assert [e.event_id for e in filter_events(evs, 60)] == ["2"]
    assert filter_events(evs, 0) == evs
    assert filter_events(evs, 1000) == []


def test_rolling_sum():
    out = rolling_sum([1, 2, 3, 4], 3)
    assert np.isnan(out[:2]).all() and out[2:].tolist() == [6, 9]
    assert rolling_sum([1.5, 2, 3], 1).tolist() == [1.5, 2, 3]
    assert rolling_sum([0, 0, 0, 0], 2)[1:].tolist() == [0, 0, 0]
    with pytest.raises(GridPVError):
        rolling_sum([1, 2], 3)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40), st.integers(1, 40))
def test_rolling_sum_matches_window_sums(xs, h):
    if h > len(xs):
        return
    out = rolling_sum(xs, h)
    for i in range(h - 1, len(xs)):
        assert out[i] == pytest.approx(sum(xs[i - h + 1:i + 1]), abs=1e-7)


def test_gust_exposure():
    days = pd.Series([10.0, 20.0, 30.0], index=[date(2014, 1, d) for d in (1, 2, 3)])
    assert gust_exposure(days, date(2014, 1, 1), date(2014, 1, 4)) == 60.0
    assert gust_exposure(days, date(2014, 1, 2), date(2014, 1, 2)) == 0.0
    with pytest.raises(GridPVError, match="missing"):
        gust_exposure(days, date(2014, 1, 1), date(2014, 1, 5))


@given(st.floats(0, 80), st.integers(1, 120))
def test_constant_gust_linear(g, n):
    idx = pd.date_range("2014-01-01", periods=n, freq="D").date
    s = pd.Series(g, index=idx)
    assert gust_exposure(s, idx[0], idx[-1] + pd.Timedelta(days=1)) == pytest.approx(g * n)


def test_monthly_gust_totals():
    idx = pd.date_range("2014-01-01", "2014-02-28", freq="D").date
    daily = pd.DataFrame({"substation_id": "A", "date": idx, "max_gust": 2.0})
    tot = monthly_gust_totals(daily, ["2014-01", "2014-02"])
    assert tot["gust"].tolist() == [62.0, 56.0]


def test_adoption_rate():
    assert adoption_rate(2, 10_000) == 0.0002
    assert adoption_rate(0, 10_000) == 0.0
    r = adoption_rate(18, 8600)
    assert round(r, 5) == 0.00209 and r < 0.009


def _brute_saidi(events, customers_total):
    total = 0
    for e in events:
        minutes = 0
        t = e.start
        # whole minutes counted one at a time
        while (e.end - t).total_seconds() >= 60:
            minutes += 1
            t = t + pd.Timedelta(minutes=1).to_pytimedelta()
        total += minutes * e.customers_affected
    return total / customers_total


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 600), st.integers(1, 5000)),
                max_size=50), st.integers(1, 20000))
def test_indices_match_brute_force(raw, nt):
    events = [make_event(i, "A", minutes=m, customers=c, day=i) for i, (_, m, c) in enumerate(raw)]
    saidi = compute_saidi(events, nt)
    saifi = compute_saifi(events, nt)
    assert saidi == _brute_saidi(events, nt)
    assert saifi == sum(e.customers_affected for e in events) / nt
    if saifi:
        assert compute_caidi(saidi, saifi) * saifi == pytest.approx(saidi, rel=1e-12)


def test_reliability_panel_columns():
    reg = make_registry((100, 200))
    evs = [make_event(1, "A", 60, 50, day=0), make_event(2, "B", 30, 20, day=35),
           make_event(3, "A", 10, 100, day=70)]
    panel = assemble_panel(evs, reg, None, [], ("2014-01", "2014-04"))
    panel["gust"] = 1.0
    out = build_reliability_panel(panel)
    a = out[out["substation_id"] == "A"].set_index("month")
    assert a["saidi"].tolist() == [30.0, 0.0, 10.0, 0.0]
    assert a["caidi"].tolist() == [60.0, 0.0, 10.0, 0.0]
    assert np.isnan(a.loc["2014-02", "S_3"])
    assert a.loc["2014-03", "S_3"] == 40.0
    assert a.loc["2014-04", "G_3"] == 3.0
    assert np.isnan(a["S_12"]).all()
    for col in ("saifi", "F_3", "F_6", "installs_3m", "Y"):
        assert col in out.columns
