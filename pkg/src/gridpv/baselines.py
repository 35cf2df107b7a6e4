"""Vector-autoregression baseline for the reliability index series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from gridpv import GridPVError, ModelError

FULL_VAR_MAX_SERIES = 10


@dataclass
class VarFit:
    p: int
    intercept: np.ndarray          # (S,)
    coefs: np.ndarray              # (p, S, S); coefs[l, i, j] multiplies y[t-l-1, j] in equation i
    se: np.ndarray                 # same shape as coefs, NaN where a coefficient is not estimated
    sigma: np.ndarray              # residual covariance (S, S)
    diagonal: bool

    @property
    def n_series(self) -> int:
        return len(self.intercept)


def _lagged(series: np.ndarray, p: int):
    n = len(series)
    lags = np.concatenate([series[p - l - 1:n - l - 1] for l in range(p)], axis=1)
    return series[p:], lags


def fit_var(series, p: int, diagonal: Optional[bool] = None) -> VarFit:
    """Equation-by-equation least squares on p lags.

    With ``diagonal`` each series regresses on its own lags only; by default this
    is used when there are more than ten series or when the full system would
    leave no residual degrees of freedom.
    """
    Y = np.asarray(series, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, S = Y.shape
    if p < 1:
        raise GridPVError("lag order must be >= 1")
    if n <= p + 1:
        raise GridPVError(f"need more than {p + 1} observations for VAR({p})")
    target, lags = _lagged(Y, p)
    m = len(target)
    if diagonal is None:
        diagonal = S > FULL_VAR_MAX_SERIES or p * S + 1 >= m
    coefs = np.zeros((p, S, S))
    se = np.full((p, S, S), np.nan)
    intercept = np.zeros(S)
    resid = np.zeros((m, S))
    for i in range(S):
        cols = [i + l * S for l in range(p)] if diagonal else list(range(p * S))
        X = np.column_stack([np.ones(m), lags[:, cols]])
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise ModelError(f"rank-deficient VAR design for series {i}")
        b, *_ = np.linalg.lstsq(X, target[:, i], rcond=None)
        r = target[:, i] - X @ b
        dof = m - X.shape[1]
        s2 = float(r @ r) / dof if dof > 0 else np.nan
        cov = s2 * np.linalg.inv(X.T @ X)
        intercept[i] = b[0]
        for k, col in enumerate(cols):
            l, j = divmod(col, S)
            coefs[l, i, j] = b[k + 1]
            se[l, i, j] = np.sqrt(cov[k + 1, k + 1])
        resid[:, i] = r
    sigma = resid.T @ resid / max(m - 1, 1)
    return VarFit(p, intercept, coefs, se, sigma, diagonal)


def forecast_next(fit: VarFit, recent) -> np.ndarray:
    """One-step forecast from the last ``p`` rows of ``recent``."""
    recent = np.asarray(recent, dtype=float)
    if recent.ndim == 1:
        recent = recent[:, None]
    if len(recent) < fit.p:
        raise GridPVError("not enough history for the lag order")
    out = fit.intercept.copy()
    for l in range(fit.p):
        out += fit.coefs[l] @ recent[-l - 1]
    return out


def rolling_forecasts(fit: VarFit, series, start: int) -> np.ndarray:
    """One-step-ahead forecasts for rows ``start:`` using observed lags."""
    Y = np.asarray(series, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if start < fit.p:
        raise GridPVError("start must leave room for p lags")
    return np.array([forecast_next(fit, Y[:t]) for t in range(start, len(Y))])


@dataclass
class MseSummary:
    by_substation: np.ndarray
    mean: float
    dispersion: float

    def formatted(self, scale: float = 1.0) -> str:
        return f"{self.mean / scale:.3g} ± {self.dispersion / scale:.3g}"


def evaluate_mse(predictions, actuals) -> MseSummary:
    """Per-substation MSE over time; grand mean over all cells, and the standard
    deviation over time of the substation-averaged squared error."""
    pred = np.asarray(predictions, dtype=float)
    act = np.asarray(actuals, dtype=float)
    if pred.shape != act.shape:
        raise GridPVError(f"prediction shape {pred.shape} != actual shape {act.shape}")
    if pred.ndim == 1:
        pred, act = pred[:, None], act[:, None]
    err = (pred - act) ** 2
    per_t = err.mean(axis=1)
    disp = float(per_t.std(ddof=1)) if len(per_t) > 1 else 0.0
    return MseSummary(err.mean(axis=0), float(err.mean()), disp)


def var_comparison(actual: dict, train_len: int = 12, lags=(1, 2),
                   others: Optional[dict] = None, diagonal: Optional[bool] = None) -> pd.DataFrame:
    """MSE table: one row per method, one column per metric.

    ``actual`` maps metric -> (n, S) observed matrix. VAR models are trained on
    the first ``train_len`` steps and scored on one-step-ahead forecasts for
    the rest. ``others`` maps method name -> {metric: predictions for the test
    steps}.
    """
    rows = []
    for p in lags:
        row = {"method": f"VAR ({p} month lag)"}
        for metric, Y in actual.items():
            Y = np.asarray(Y, dtype=float)
            fit = fit_var(Y[:train_len], p, diagonal)
            pred = rolling_forecasts(fit, Y, train_len)
            s = evaluate_mse(pred, Y[train_len:])
            row[f"{metric}_mse"] = s.mean
            row[f"{metric}_sd"] = s.dispersion
        rows.append(row)
    for name, preds in (others or {}).items():
        row = {"method": name}
        for metric, Y in actual.items():
            s = evaluate_mse(preds[metric], np.asarray(Y, dtype=float)[train_len:])
            row[f"{metric}_mse"] = s.mean
            row[f"{metric}_sd"] = s.dispersion
        rows.append(row)
    return pd.DataFrame(rows)
