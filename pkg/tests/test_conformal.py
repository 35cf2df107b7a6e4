import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridpv import GridPVError
from gridpv.conformal import (conformal_quantile, empirical_coverage, intervals,
                              nonconformity_scores, prediction_interval, substation_quantiles)


def test_scores_examples():
    y = np.array([[5.0, 1.0]])
    assert (nonconformity_scores(y[:, :, None], y) == 0).all()
    ens = np.array([[[3.0, 9.0]]])
    assert nonconformity_scores(ens, np.array([[5.0]]))[0, 0] == 2.0
    with pytest.raises(GridPVError):
        nonconformity_scores(np.zeros((2, 2, 1)), np.zeros((2, 3)))


@given(st.integers(0, 2**32 - 1))
def test_extra_replication_never_increases_score(seed):
    rng = np.random.default_rng(seed)
    ens = rng.normal(size=(4, 3, 5))
    y = rng.normal(size=(4, 3))
    more = np.concatenate([ens, rng.normal(size=(4, 3, 1))], axis=2)
    assert (nonconformity_scores(more, y) <= nonconformity_scores(ens, y)).all()


def test_quantile_examples():
    assert conformal_quantile([4, 1, 3, 2], 0.5) == 3
    assert conformal_quantile([0, 0, 0], 0.1) == 0
    assert conformal_quantile([1, 2, 3, 4], 1e-6) == 4
    with pytest.raises(GridPVError):
        conformal_quantile([], 0.1)
    with pytest.raises(GridPVError):
        conformal_quantile([1.0], 1.0)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=60), st.floats(0.01, 0.99))
def test_quantile_order_statistic(res, alpha):
    n = len(res)
    q = conformal_quantile(res, alpha)
    # at least ceil((1-alpha)(n+1)) of the n+1 points (or all n) are <= q
    assert sum(r <= q for r in res) >= min(n, int(np.ceil((1 - alpha) * (n + 1) - 1e-9)))
    assert q in res


def test_interval_examples():
    ens = np.array([[[7.0]]])
    pt, lo, hi = prediction_interval(ens, np.array([0.0]), 0.1)
    assert pt[0, 0] == lo[0, 0] == hi[0, 0] == 7.0
    pt, lo, hi = prediction_interval(np.array([[[10.0, 20.0]]]), np.array([5.0]), 0.1)
    assert (lo[0, 0], hi[0, 0]) == (5.0, 25.0)
    _, lo, _ = prediction_interval(np.array([[[1.0, 2.0]]]), np.array([5.0]), 0.1)
    assert lo[0, 0] == 0.0
    _, lo, _ = prediction_interval(np.array([[[1.0, 2.0]]]), np.array([5.0]), 0.1, nonnegative=False)
    assert lo[0, 0] == -4.0


@given(st.floats(0, 10), st.floats(0.001, 10))
def test_wider_quantile_wider_interval(q, dq):
    ens = np.array([[[30.0, 40.0], [50.0, 55.0]]])
    _, lo1, hi1 = prediction_interval(ens, np.array([q, q]), 0.1)
    _, lo2, hi2 = prediction_interval(ens, np.array([q + dq, q + dq]), 0.1)
    assert ((hi2 - lo2) > (hi1 - lo1)).all()


def test_interval_records():
    out = intervals(np.ones((2, 3, 4)), np.zeros(3), 0.25, first_timestep=5)
    assert len(out) == 6 and out[0].timestep == 5 and out[-1].substation == 2
    assert out[0].level == 0.75


def test_coverage_extremes():
    assert empirical_coverage([0, 0], [1, 1], [0.5, 1.0]) == 1.0
    assert empirical_coverage([0, 0], [1, 1], [2, -1]) == 0.0


def _coverage_run(seed, alpha, n=200, K=10):
    rng = np.random.default_rng(seed)
    scale = rng.gamma(2.0, 1.0, size=2)

    def draw(*shape):
        # gamma draws with a per-substation scale on axis 1
        x = rng.gamma(2.0, 1.0, size=shape)
        return x * (scale[None, :, None] if len(shape) == 3 else scale[None, :])

    cal_ens, cal_y = draw(n, 2, K), draw(n, 2)
    q = substation_quantiles(nonconformity_scores(cal_ens, cal_y), alpha)
    test_ens, test_y = draw(n, 2, K), draw(n, 2)
    _, lo, hi = prediction_interval(test_ens, q, alpha)
    return empirical_coverage(lo, hi, test_y)


def test_exchangeable_coverage_at_half():
    cov = np.mean([_coverage_run(s, 0.5) for s in range(20)])
    assert cov >= 0.48


@pytest.mark.parametrize("seed", range(5))
def test_nested_levels(seed):
    rng = np.random.default_rng(seed)
    res = rng.exponential(size=(100, 3))
    qs = [substation_quantiles(res, a) for a in (0.5, 0.25, 0.1)]
    assert (qs[0] <= qs[1]).all() and (qs[1] <= qs[2]).all()
