import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.special import expit

from gridpv import GridPVError, ModelError
from gridpv.econometrics import (CF, PanelSpec, RankDeficientError, SeparationError, anderson_rubin,
                                 average_marginal_effect, cluster_bootstrap, fe_design,
                                 fit_first_stage, fit_two_part, glm_log_gauss, logit_irls,
                                 marginal_effects, predictive_margins, two_part_expectation, vif)
from gridpv.econometrics.twopart import TwoPartFit
from gridpv.synth import PanelDgp, gen_twopart_panel

SMALL = dict(n_units=12, n_months=24)


def _spec(df, **kw):
    return PanelSpec(df, controls=["x1", "x2"], **kw)


@pytest.fixture(scope="module")
def default_fit():
    df, truth = gen_twopart_panel(PanelDgp(), 0)
    return fit_two_part(_spec(df)), truth


# -- first stage and weak-instrument tools ---------------------------------------------------

def _independent_cluster_wald(df, spec):
    """Cluster-robust Wald statistic for the instrument, computed from scratch."""
    frame = spec.frame()
    q = frame[spec.time].astype(str)
    u = frame[spec.unit].astype(str)
    cols = [np.ones(len(frame)), frame[spec.instrument], frame[spec.frequency], frame["x1"], frame["x2"]]
    cols += [(q == lev).astype(float) for lev in sorted(q.unique())[1:]]
    cols += [(u == lev).astype(float) for lev in sorted(u.unique())[1:]]
    X = np.column_stack(cols)
    y = frame[spec.treatment].to_numpy()
    XtX_inv = np.linalg.inv(X.T @ X)
    b = XtX_inv @ X.T @ y
    e = y - X @ b
    meat = np.zeros((X.shape[1], X.shape[1]))
    for g in u.unique():
        idx = (u == g).to_numpy()
        sg = X[idx].T @ e[idx]
        meat += np.outer(sg, sg)
    n, k, G = X.shape[0], X.shape[1], u.nunique()
    V = G / (G - 1) * (n - 1) / (n - k) * XtX_inv @ meat @ XtX_inv
    return b[1] ** 2 / V[1, 1]


def test_f_equals_squared_cluster_t():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 1)
    spec = _spec(df)
    fs = fit_first_stage(spec)
    assert fs.f_stat == pytest.approx(fs.t_stat ** 2, rel=1e-12)
    assert fs.f_stat == pytest.approx(_independent_cluster_wald(df, spec), rel=1e-10)


@pytest.mark.slow
def test_first_stage_ci_covers_truth():
    hits = 0
    for seed in range(100):
        df, _ = gen_twopart_panel(PanelDgp(), seed)
        fs = fit_first_stage(_spec(df))
        b, se = fs.coef["G_3"], fs.se["G_3"]
        hits += abs(b - 3.5) <= 1.96 * se
    assert hits >= 90


@pytest.mark.slow
def test_noise_instrument_f_rate():
    below = sum(fit_first_stage(_spec(gen_twopart_panel(PanelDgp(a1=0.0), s)[0])).f_stat < 4
                for s in range(100))
    # reference: |t| < 2 under t(G - 1) with G = 44 clusters
    p_ref = 2 * stats.t.cdf(2.0, 43) - 1
    lo, hi = stats.binom.ppf([0.005, 0.995], 100, p_ref)
    assert lo <= below <= hi


def _linear_panel(seed, effect, strength, units=44, months=40):
    rng = np.random.default_rng(seed)
    n = units * months
    unit = np.repeat(np.arange(units), months)
    month = np.tile(np.arange(months), units)
    G = rng.normal(size=n)
    v = rng.normal(size=n)
    S = strength * G + v + rng.normal(0, 0.3, units)[unit]
    Y = effect * S + 0.8 * v + rng.normal(size=n) + rng.normal(0, 0.3, units)[unit]
    return pd.DataFrame({"substation_id": [f"U{u}" for u in unit],
                         "month": [str(pd.Period("2014-01", "M") + m) for m in month],
                         "S_3": S, "G_3": G, "Y": Y, "F_3": rng.normal(size=n)})


@pytest.mark.slow
def test_anderson_rubin_size_and_power():
    size = np.mean([anderson_rubin(PanelSpec(_linear_panel(s, 0.0, 0.0)))[1] < 0.05
                    for s in range(200)])
    assert 0.02 <= size <= 0.09
    power = np.mean([anderson_rubin(PanelSpec(_linear_panel(s, 0.3, 1.0)))[1] < 0.05
                     for s in range(100)])
    assert power >= 0.8


def test_anderson_rubin_at_true_value_is_unremarkable():
    df = _linear_panel(3, 0.5, 1.0)
    stat, p = anderson_rubin(PanelSpec(df), beta0=0.5)
    assert p > 0.01
    stat0, p0 = anderson_rubin(PanelSpec(df), beta0=0.0)
    assert p0 < 1e-6 and stat0 > stat


# -- logit -----------------------------------------------------------------------------------

def test_logit_intercept_only_half():
    d = np.tile([0.0, 1.0], 50)
    fit = logit_irls(np.ones((100, 1)), d, ["const"], np.arange(100) % 10)
    assert abs(fit.coef["const"]) < 1e-6


def test_odds_multiplier_reading():
    assert math.exp(0.079) == pytest.approx(1.0822, abs=1e-4)
    assert round((math.exp(0.079) - 1) * 100, 1) == 8.2


@pytest.mark.slow
def test_logit_recovers_truth():
    truth = np.array([-0.5, 0.8, -0.4])
    good = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = np.column_stack([np.ones(5000), rng.normal(size=(5000, 2))])
        d = (rng.uniform(size=5000) < expit(X @ truth)).astype(float)
        fit = logit_irls(X, d, ["const", "a", "b"], np.arange(5000) % 50)
        good += np.all(np.abs(fit.coef.to_numpy() - truth) <= 3 * fit.se.to_numpy())
    assert good >= 95


def test_logit_separation_detected():
    x = np.linspace(-1, 1, 200)
    X = np.column_stack([np.ones(200), x])
    with pytest.raises(SeparationError):
        logit_irls(X, (x > 0).astype(float), ["const", "x"], np.arange(200) % 5)


def test_logit_matches_scipy_optimum():
    from scipy.optimize import minimize
    rng = np.random.default_rng(4)
    X = np.column_stack([np.ones(400), rng.normal(size=(400, 2))])
    d = (rng.uniform(size=400) < expit(X @ [0.2, 1.0, -0.5])).astype(float)
    nll = lambda b: -np.sum(d * (X @ b) - np.logaddexp(0, X @ b))
    ref = minimize(nll, np.zeros(3), method="BFGS", options=dict(gtol=1e-10)).x
    fit = logit_irls(X, d, ["const", "a", "b"], np.arange(400) % 8)
    np.testing.assert_allclose(fit.coef.to_numpy(), ref, atol=1e-5)


# -- log-link GLM ----------------------------------------------------------------------------

def test_glm_noiseless_exact():
    x = np.linspace(0, 200, 300)
    X = np.column_stack([np.ones(300), x])
    y = np.exp(-8 - 0.02 * x)
    fit = glm_log_gauss(X, y, ["const", "x"], np.arange(300) % 10)
    np.testing.assert_allclose(fit.coef.to_numpy(), [-8, -0.02], atol=1e-8, rtol=0)


@given(st.lists(st.floats(1e-4, 1e3), min_size=3, max_size=40))
@settings(deadline=None)
def test_glm_intercept_only_log_mean(ys):
    y = np.asarray(ys)
    fit = glm_log_gauss(np.ones((len(y), 1)), y, ["const"], np.arange(len(y)) % 3)
    assert fit.coef["const"] == pytest.approx(np.log(y.mean()), abs=1e-9)


@pytest.mark.slow
def test_glm_recovers_truth():
    truth = np.array([-7.8, -0.004, 0.2])
    good = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = 2400
        X = np.column_stack([np.ones(n), rng.uniform(0, 200, n), rng.normal(size=n)])
        mu = np.exp(X @ truth)
        # Gaussian noise proportional to the mean; the floor almost never binds
        y = mu * (1 + 0.3 * rng.normal(size=n)).clip(0.05)
        fit = glm_log_gauss(X, y, ["const", "s", "x"], np.arange(n) % 40)
        good += np.all(np.abs(fit.coef.to_numpy() - truth) <= 3 * fit.se.to_numpy())
    assert good >= 95


def test_glm_rejects_nonpositive():
    with pytest.raises(ModelError):
        glm_log_gauss(np.ones((3, 1)), np.array([1.0, 0.0, 2.0]), ["const"], [0, 1, 2])


# -- two-part model --------------------------------------------------------------------------

def _zeroed(fit, glm_const=0.0):
    return TwoPartFit(fit.spec, fit.frame, fit.first_stage, _copy_coef(fit.logit, 0.0),
                      _copy_coef(fit.glm, 0.0, glm_const), fit.control_function)


def _copy_coef(part, value, const=None):
    from dataclasses import replace
    coef = pd.Series(value, index=part.coef.index, dtype=float)
    if const is not None:
        coef["const"] = const
    return replace(part, coef=coef)


def test_expectation_examples():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 2)
    fit = fit_two_part(_spec(df))
    zero = _zeroed(fit)
    np.testing.assert_array_equal(two_part_expectation(zero), 0.5)
    half = _zeroed(fit, glm_const=math.log(0.001))
    np.testing.assert_allclose(two_part_expectation(half), 0.0005, rtol=1e-12)


def test_expectation_factorises(default_fit):
    fit, _ = default_fit
    fr = fit.frame
    X1 = fe_design(fr, list(fit.logit.coef.index[1:5]) + [CF], "substation_id", "quarter")
    X2 = fe_design(fr, list(fit.glm.coef.index[1:5]) + [CF], "substation_id", "quarter")
    assert X1.names == list(fit.logit.coef.index) and X2.names == list(fit.glm.coef.index)
    pr = expit(X1.X @ fit.logit.coef.to_numpy())
    ey = np.exp(X2.X @ fit.glm.coef.to_numpy())
    np.testing.assert_array_equal(two_part_expectation(fit), pr * ey)


def test_ame_zero_when_coefficients_zero():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 3)
    zero = _zeroed(fit_two_part(_spec(df)))
    assert marginal_effects(zero, "S_3").mean() == 0.0


def _fd_ame(fit, v):
    x = fit.frame[v].to_numpy()
    h = 1e-4 * max(1.0, np.abs(x).mean())
    up = two_part_expectation(fit, overrides={v: x + h})
    dn = two_part_expectation(fit, overrides={v: x - h})
    return float(np.mean((up - dn) / (2 * h)))


@pytest.mark.parametrize("seed", range(5))
def test_ame_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    spec = PanelDgp(**SMALL, b=tuple(rng.normal(0, 0.02, 4)), g=tuple(rng.normal(0, 0.02, 4)))
    df, _ = gen_twopart_panel(spec, seed)
    fit = fit_two_part(_spec(df))
    for v in ("S_3", "F_3", "x1"):
        analytic = marginal_effects(fit, v).mean()
        assert analytic == pytest.approx(_fd_ame(fit, v), rel=1e-6)


def test_positive_participation_negative_magnitude_gives_negative_ame(default_fit):
    fit, _ = default_fit
    assert fit.coefficient("logit", "S_3") > 0 and fit.coefficient("glm", "S_3") < 0
    assert marginal_effects(fit, "S_3").mean() < 0


def test_control_function_enters_both_parts(default_fit):
    fit, _ = default_fit
    assert CF in fit.logit.coef.index and CF in fit.glm.coef.index
    assert "fe_time" in fit.logit.dropped_levels and "fe_unit" in fit.glm.dropped_levels


def test_bootstrap_deterministic_and_threads():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 5)
    fit = fit_two_part(_spec(df))
    a = average_marginal_effect(fit, ["S_3", "F_3"], n_boot=12, seed=1)
    b = average_marginal_effect(fit, ["S_3", "F_3"], n_boot=12, seed=1, threads=3)
    assert a == b
    assert a[0].n_boot == 12 and a[0].se > 0
    assert a[0].ci_low < a[0].value < a[0].ci_high


def test_bootstrap_failure_threshold():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 6)
    fit = fit_two_part(_spec(df))
    calls = []

    def flaky(f):
        calls.append(1)
        if len(calls) % 5 == 0:
            raise ModelError("boom")
        return np.array([1.0])

    with pytest.raises(ModelError, match="bootstrap failed"):
        cluster_bootstrap(fit, flaky, n_boot=20, seed=0)


def test_ame_requires_variable_in_both_parts(default_fit):
    fit, _ = default_fit
    with pytest.raises(ModelError):
        average_marginal_effect(fit, "G_3", n_boot=0)


def test_margins_definition(default_fit):
    fit, _ = default_fit
    vbar = fit.frame["S_3"].mean()
    out = predictive_margins(fit, "S_3", [vbar], n_boot=0)
    assert out["margin"].iloc[0] == pytest.approx(two_part_expectation(fit, overrides={"S_3": vbar}).mean(),
                                                  rel=1e-14)


def test_margins_decreasing_when_magnitude_effect_dominates():
    df, _ = gen_twopart_panel(PanelDgp(b=(0.002, -0.2, 0.3, -0.2), g=(-0.01, 0.05, 0.2, 0.1)), 4)
    fit = fit_two_part(_spec(df))
    out = predictive_margins(fit, "S_3", np.linspace(0, 250, 11), n_boot=0)
    assert np.all(np.diff(out["margin"]) < 0)


def test_margins_flat_without_dependence():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 8)
    fit = fit_two_part(_spec(df))
    from dataclasses import replace
    lc, gc = fit.logit.coef.copy(), fit.glm.coef.copy()
    lc["S_3"] = gc["S_3"] = 0.0
    flat = type(fit)(fit.spec, fit.frame, fit.first_stage, replace(fit.logit, coef=lc),
                     replace(fit.glm, coef=gc), True)
    out = predictive_margins(flat, "S_3", [0, 100, 200], n_boot=0)
    assert np.ptp(out["margin"]) == 0


def test_margins_bootstrap_columns():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 9)
    out = predictive_margins(fit_two_part(_spec(df)), "S_3", [50, 150], n_boot=10, seed=2)
    assert list(out.columns) == ["value", "margin", "se", "lower", "upper"]
    assert (out["lower"] < out["margin"]).all()


def test_panel_spec_validation():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 0)
    with pytest.raises(GridPVError):
        PanelSpec(df.drop(columns=["G_3"])).frame()
    one = df[df["substation_id"] == "SUB001"]
    with pytest.raises(GridPVError):
        fit_two_part(_spec(one))


def test_rank_deficiency_reported():
    df, _ = gen_twopart_panel(PanelDgp(**SMALL), 0)
    df["x2"] = df["x1"] * 2
    with pytest.raises(RankDeficientError):
        fit_first_stage(_spec(df))


# -- VIF -------------------------------------------------------------------------------------

def test_vif_orthogonal():
    a = np.array([1, -1, 1, -1, 1, -1, 1, -1], float)
    b = np.array([1, 1, -1, -1, 1, 1, -1, -1], float)
    c = np.array([1, 1, 1, 1, -1, -1, -1, -1], float)
    np.testing.assert_allclose(vif({"a": a, "b": b, "c": c}), 1.0)


def test_vif_correlated_pair():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(500, 2))
    z = (z - z.mean(0)) @ np.linalg.inv(np.linalg.cholesky(np.cov(z.T, bias=True))).T
    x = z[:, 0]
    y = 0.8 * z[:, 0] + 0.6 * z[:, 1]
    out = vif({"x": x, "y": y})
    np.testing.assert_allclose(out, 1 / (1 - 0.64), rtol=1e-10)
    assert round(out["x"], 2) == 2.78


def test_vif_duplicate_infinite():
    x = np.arange(10.0)
    out = vif({"x": x, "dup": x.copy(), "z": np.sin(x)})
    assert np.isinf(out["x"]) and np.isinf(out["dup"])
