import json

import numpy as np
import pytest
from scipy import stats

from gridpv import GridPVError
from gridpv.econometrics import PanelSpec, fit_two_part
from gridpv.ingest import load_events, load_registry
from gridpv.synth import HawkesDgp, PanelDgp, gen_hawkes_dataset, gen_twopart_panel, load_truth


def test_poisson_dataset_interarrivals(tmp_path):
    spec = HawkesDgp(n_subs=5, mu=0.5, alpha=0.0, horizon_days=1000)
    gen_hawkes_dataset(spec, 3, tmp_path)
    events = load_events(tmp_path / "events.csv")
    t = np.array([e.start.timestamp() for e in events]) / 86400.0
    gaps = np.diff(t)
    rate = spec.n_subs * spec.mu
    assert stats.kstest(gaps * rate, "expon").pvalue > 0.01


def test_same_seed_same_bytes(tmp_path):
    spec = HawkesDgp(n_subs=3, mu=0.2, alpha=0.4, horizon_days=200)
    gen_hawkes_dataset(spec, 9, tmp_path / "a")
    gen_hawkes_dataset(spec, 9, tmp_path / "b")
    for name in ("events.csv", "substations.csv", "truth.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    gen_hawkes_dataset(spec, 10, tmp_path / "c")
    assert (tmp_path / "a" / "events.csv").read_bytes() != (tmp_path / "c" / "events.csv").read_bytes()


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_event_count_branching_mean(tmp_path, alpha):
    spec = HawkesDgp(n_subs=4, mu=0.3, alpha=alpha, k_nn=1, horizon_days=1500)
    truth = gen_hawkes_dataset(spec, 1, tmp_path)
    mean = spec.mu * spec.horizon_days / (1 - alpha) * spec.n_subs
    # cluster-count variance of a stationary Hawkes process
    sd = np.sqrt(spec.mu * spec.horizon_days * spec.n_subs / (1 - alpha) ** 3)
    assert abs(truth["n_events"] - mean) <= 3 * sd
    assert len(load_events(tmp_path / "events.csv")) == truth["n_events"]


def test_dataset_loads_and_truth_validates(tmp_path):
    gen_hawkes_dataset(HawkesDgp(n_subs=6, horizon_days=60), 0, tmp_path)
    reg = load_registry(tmp_path / "substations.csv")
    assert len(reg) == 6
    truth = load_truth(tmp_path / "truth.json")
    assert truth["params"]["alpha"] == 0.5 and truth["kind"] == "hawkes"
    doc = json.loads((tmp_path / "truth.json").read_text())
    del doc["params"]
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(GridPVError, match="missing keys"):
        load_truth(tmp_path / "bad.json")


def test_zero_intensity_warns(tmp_path, caplog):
    truth = gen_hawkes_dataset(HawkesDgp(n_subs=2, mu=0.0, horizon_days=30), 0, tmp_path)
    assert truth["n_events"] == 0
    assert (tmp_path / "events.csv").read_text().count("\n") == 1
    assert "no events" in caplog.text


def test_panel_geometry_and_purity():
    a, ta = gen_twopart_panel(PanelDgp(), 4)
    b, _ = gen_twopart_panel(PanelDgp(), 4)
    assert len(a) == 4884 and a["substation_id"].nunique() == 44
    assert a.equals(b)
    assert ta["first_stage"]["G_3"] == 3.5


@pytest.mark.parametrize("target", [0.3, 0.5, 0.7])
def test_zero_fraction_controllable(target):
    df, truth = gen_twopart_panel(PanelDgp(zero_fraction=target), 1)
    assert abs((df["Y"] == 0).mean() - target) <= 0.05


def test_degenerate_specs_rejected():
    with pytest.raises(GridPVError):
        PanelDgp(sigma_v=0.0)
    with pytest.raises(GridPVError):
        PanelDgp(n_units=1)


def _estimates(rho_logit, rho_glm, seed, n_units=50, n_months=100):
    df, _ = gen_twopart_panel(PanelDgp(n_units=n_units, n_months=n_months, rho_logit=rho_logit,
                                       rho_glm=rho_glm), seed)
    spec = PanelSpec(df, controls=["x1", "x2"])
    return fit_two_part(spec, True), fit_two_part(spec, False)


def test_no_endogeneity_naive_and_iv_agree():
    cf, naive = _estimates(0.0, 0.0, 2)
    for part in ("logit", "glm"):
        a, b = getattr(cf, part), getattr(naive, part)
        assert abs(a.coef["S_3"] - b.coef["S_3"]) <= 2 * a.se["S_3"]


@pytest.mark.slow
def test_strong_endogeneity_biases_naive_only():
    truth = {"logit": 0.01, "glm": -0.004}
    z_cf = {p: [] for p in truth}
    z_naive = {p: [] for p in truth}
    for seed in range(5):
        cf, naive = _estimates(0.05, 0.03, seed)
        for part, t in truth.items():
            a, b = getattr(cf, part), getattr(naive, part)
            z_cf[part].append((a.coef["S_3"] - t) / a.se["S_3"])
            z_naive[part].append((b.coef["S_3"] - t) / b.se["S_3"])
    for part in truth:
        assert abs(np.mean(z_naive[part])) > 5
        assert abs(np.mean(z_cf[part])) < 2
