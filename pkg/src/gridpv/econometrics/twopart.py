"""Two-part control-function model: logit participation and log-link Gaussian GLM.

Both parts share the first-stage residual as a control function, the same
regressors and additive substation and quarter fixed effects. Expected
outcome is ``expit(x b) * exp(x g)``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from gridpv import ModelError
from gridpv.econometrics.design import (PanelSpec, check_rank, cluster_vcov, coef_table,
                                        design_like, fe_design)
from gridpv.econometrics.linear import IvFit, fit_first_stage

log = logging.getLogger(__name__)

CF = "eps_hat"
SEPARATION_LIMIT = 30.0


class SeparationError(ModelError):
    pass


class ConvergenceError(ModelError):
    pass


@dataclass
class GlmFit:
    coef: pd.Series
    vcov: np.ndarray
    nobs: int
    n_iter: int
    dropped_levels: dict
    loglik: float = np.nan
    loglik_null: float = np.nan

    @property
    def se(self) -> pd.Series:
        return pd.Series(np.sqrt(np.diag(self.vcov)), index=self.coef.index)

    @property
    def pseudo_r2(self) -> float:
        """McFadden R^2 (logit only)."""
        return 1 - self.loglik / self.loglik_null

    def table(self) -> pd.DataFrame:
        return coef_table(self.coef, self.vcov)


def logit_irls(X: np.ndarray, d: np.ndarray, names: Sequence[str], clusters,
               max_iter: int = 100, tol: float = 1e-8, dropped_levels=None) -> GlmFit:
    """Logistic MLE by iteratively reweighted least squares with cluster-robust vcov."""
    check_rank(X, names)
    n, k = X.shape
    sd = X.std(axis=0)
    beta = np.zeros(k)
    for it in range(1, max_iter + 1):
        p = expit(X @ beta)
        w = p * (1 - p)
        H = (X * w[:, None]).T @ X
        step = np.linalg.solve(H, X.T @ (d - p))
        beta = beta + step
        if np.any(np.abs(beta * sd)[sd > 0] > SEPARATION_LIMIT) or not np.all(np.isfinite(beta)):
            raise SeparationError("logit coefficients diverge: perfect separation")
        if np.max(np.abs(step)) < tol:
            break
    else:
        raise ConvergenceError(f"logit IRLS did not converge in {max_iter} iterations")
    p = expit(X @ beta)
    H = (X * (p * (1 - p))[:, None]).T @ X
    V = cluster_vcov(X * (d - p)[:, None], np.linalg.inv(H), np.asarray(clusters))
    eps = 1e-300
    ll = float(np.sum(d * np.log(p + eps) + (1 - d) * np.log(1 - p + eps)))
    pbar = d.mean()
    ll0 = float(n * (pbar * np.log(pbar) + (1 - pbar) * np.log(1 - pbar))) if 0 < pbar < 1 else 0.0
    return GlmFit(pd.Series(beta, index=list(names)), V, n, it, dropped_levels or {}, ll, ll0)


def glm_log_gauss(X: np.ndarray, y: np.ndarray, names: Sequence[str], clusters,
                  max_iter: int = 200, tol: float = 1e-10, dropped_levels=None) -> GlmFit:
    """Least squares on ``y ~ exp(X g)`` by damped Gauss-Newton, cluster-robust vcov."""
    if np.any(y <= 0):
        raise ModelError("log-link part requires strictly positive outcomes")
    check_rank(X, names)
    n, k = X.shape
    g = np.zeros(k)
    g[list(names).index("const")] = np.log(y.mean())
    ssr = float(np.sum((y - np.exp(X @ g)) ** 2))
    scale = y.mean()
    for it in range(1, max_iter + 1):
        mu = np.exp(X @ g)
        J = X * mu[:, None]
        step, *_ = np.linalg.lstsq(J / scale, (y - mu) / scale, rcond=None)
        t = 1.0
        for _ in range(40):
            cand = g + t * step
            new_ssr = float(np.sum((y - np.exp(X @ cand)) ** 2))
            if np.isfinite(new_ssr) and new_ssr <= ssr:
                break
            t /= 2
        else:
            cand, new_ssr = g, ssr
        g, ssr = cand, new_ssr
        if np.max(np.abs(t * step)) < tol or ssr == 0:
            break
    else:
        raise ConvergenceError(f"log-link GLM did not converge in {max_iter} iterations")
    mu = np.exp(X @ g)
    J = X * mu[:, None]
    bread = np.linalg.inv(J.T @ J)
    V = cluster_vcov(J * (y - mu)[:, None], bread, np.asarray(clusters))
    return GlmFit(pd.Series(g, index=list(names)), V, n, it, dropped_levels or {})


def _part_regressors(spec: PanelSpec, control_function: bool) -> list[str]:
    regs = [spec.treatment]
    if spec.frequency:
        regs.append(spec.frequency)
    regs.extend(spec.controls)
    if control_function:
        regs.append(CF)
    return regs


def fit_logit(spec: PanelSpec, frame: pd.DataFrame, control_function: bool = True) -> GlmFit:
    """Participation model for D = 1{Y > 0}. ``frame`` must carry ``eps_hat`` when
    ``control_function`` is set."""
    design = fe_design(frame, _part_regressors(spec, control_function), spec.unit, spec.time)
    d = (frame[spec.outcome].to_numpy(dtype=float) > 0).astype(float)
    return logit_irls(design.X, d, design.names, frame[spec.unit].to_numpy(),
                      dropped_levels=design.dropped_levels)


def fit_glm_log(spec: PanelSpec, frame: pd.DataFrame, control_function: bool = True) -> GlmFit:
    """Magnitude model on the Y > 0 rows of ``frame``."""
    pos = frame[frame[spec.outcome] > 0]
    if len(pos) == 0:
        raise ModelError("no positive outcomes for the second part")
    design = fe_design(pos, _part_regressors(spec, control_function), spec.unit, spec.time)
    return glm_log_gauss(design.X, pos[spec.outcome].to_numpy(dtype=float), design.names,
                         pos[spec.unit].to_numpy(), dropped_levels=design.dropped_levels)


@dataclass
class TwoPartFit:
    spec: PanelSpec
    frame: pd.DataFrame
    first_stage: Optional[IvFit]
    logit: GlmFit
    glm: GlmFit
    control_function: bool = True

    def indices(self, frame: Optional[pd.DataFrame] = None, overrides: Optional[dict] = None):
        """Linear predictors (eta1, eta2) for every row of ``frame``."""
        df = self.frame if frame is None else frame
        X1 = design_like(df, self.logit.coef.index, self.spec.unit, self.spec.time, overrides)
        X2 = design_like(df, self.glm.coef.index, self.spec.unit, self.spec.time, overrides)
        return X1 @ self.logit.coef.to_numpy(), X2 @ self.glm.coef.to_numpy()

    def coefficient(self, part: str, name: str) -> float:
        coef = self.logit.coef if part == "logit" else self.glm.coef
        return float(coef.get(name, 0.0))


def fit_two_part(spec: PanelSpec, control_function: bool = True,
                 frame: Optional[pd.DataFrame] = None) -> TwoPartFit:
    """First stage (when ``control_function``), then both parts on the same sample."""
    df = spec.frame() if frame is None else frame
    df = df.copy()
    first = None
    if control_function:
        first = fit_first_stage(spec, df)
        df[CF] = first.resid
    logit_fit = fit_logit(spec, df, control_function)
    glm_fit = fit_glm_log(spec, df, control_function)
    return TwoPartFit(spec, df, first, logit_fit, glm_fit, control_function)


def two_part_expectation(fit: TwoPartFit, rows: Optional[pd.DataFrame] = None,
                         overrides: Optional[dict] = None) -> np.ndarray:
    """E[Y | x] = Pr(Y > 0 | x) * E[Y | Y > 0, x] for each row."""
    eta1, eta2 = fit.indices(rows, overrides)
    return expit(eta1) * np.exp(eta2)


def marginal_effects(fit: TwoPartFit, variable: str, rows: Optional[pd.DataFrame] = None,
                     overrides: Optional[dict] = None) -> np.ndarray:
    """Row-wise dE[Y|x]/dv = [L'(eta1) b_v + L(eta1) g_v] exp(eta2)."""
    eta1, eta2 = fit.indices(rows, overrides)
    p = expit(eta1)
    b = fit.coefficient("logit", variable)
    g = fit.coefficient("glm", variable)
    return (p * (1 - p) * b + p * g) * np.exp(eta2)


@dataclass(frozen=True)
class AmeEstimate:
    variable: str
    value: float
    se: float
    ci_low: float
    ci_high: float
    n_boot: int = 0

    @classmethod
    def from_draws(cls, variable, value, draws):
        draws = np.asarray(draws, dtype=float)
        se = float(draws.std(ddof=1)) if len(draws) > 1 else float("nan")
        return cls(variable, float(value), se, value - 1.96 * se, value + 1.96 * se, len(draws))


def _resample_clusters(df: pd.DataFrame, unit: str, rng: np.random.Generator) -> pd.DataFrame:
    groups = {k: g for k, g in df.groupby(unit, sort=True)}
    keys = list(groups)
    picks = rng.integers(0, len(keys), len(keys))
    parts = []
    for j, i in enumerate(picks):
        part = groups[keys[i]].copy()
        # each draw is its own cluster and its own fixed effect
        part[unit] = f"{keys[i]}#{j}"
        parts.append(part)
    return pd.concat(parts, ignore_index=True)


def cluster_bootstrap(fit: TwoPartFit, statistic: Callable[[TwoPartFit], np.ndarray],
                      n_boot: int = 200, seed: int = 0, threads: int = 1,
                      max_failure: float = 0.05) -> np.ndarray:
    """Refit on substation-resampled panels and collect ``statistic`` of each refit.

    Replicate b uses the generator seeded by (seed, b). Raises when more than
    ``max_failure`` of the replicates fail to fit.
    """
    spec = fit.spec
    base = fit.frame.drop(columns=[CF], errors="ignore")

    def one(b):
        rng = np.random.default_rng([seed, b])
        df = _resample_clusters(base, spec.unit, rng)
        try:
            refit = fit_two_part(spec, fit.control_function, frame=df)
            return np.atleast_1d(np.asarray(statistic(refit), dtype=float))
        except ModelError as exc:
            log.debug("bootstrap replicate %d failed: %s", b, exc)
            return None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(n_boot)))
    else:
        results = [one(b) for b in range(n_boot)]
    ok = [r for r in results if r is not None]
    failed = n_boot - len(ok)
    if failed > max_failure * n_boot:
        raise ModelError(f"bootstrap failed in {failed} of {n_boot} replicates")
    return np.vstack(ok)


def average_marginal_effect(fit: TwoPartFit, variables: Sequence[str] | str, n_boot: int = 200,
                            seed: int = 0, threads: int = 1) -> list[AmeEstimate]:
    """Sample-mean marginal effect on E[Y|x] with cluster-bootstrap standard errors."""
    if isinstance(variables, str):
        variables = [variables]
    for v in variables:
        if v not in fit.logit.coef.index or v not in fit.glm.coef.index:
            raise ModelError(f"{v!r} must enter both parts of the model")

    def stat(f):
        return np.array([marginal_effects(f, v).mean() for v in variables])

    point = stat(fit)
    draws = cluster_bootstrap(fit, stat, n_boot, seed, threads) if n_boot > 1 else np.empty((0, len(variables)))
    return [AmeEstimate.from_draws(v, point[i], draws[:, i] if len(draws) else []) for i, v in enumerate(variables)]


def predictive_margins(fit: TwoPartFit, variable: str, grid: Sequence[float], n_boot: int = 200,
                       seed: int = 0, threads: int = 1) -> pd.DataFrame:
    """Mean predicted outcome with ``variable`` set to each grid value in every row."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ModelError("grid must be nonempty")

    def stat(f):
        return np.array([two_part_expectation(f, overrides={variable: v}).mean() for v in grid])

    point = stat(fit)
    out = pd.DataFrame({"value": grid, "margin": point})
    if n_boot > 1:
        draws = cluster_bootstrap(fit, stat, n_boot, seed, threads)
        se = draws.std(axis=0, ddof=1)
        out["se"] = se
        out["lower"] = point - 1.96 * se
        out["upper"] = point + 1.96 * se
    return out
