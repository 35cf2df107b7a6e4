"""Least-squares pieces: gust first stage, Anderson-Rubin test, variance inflation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from gridpv import GridPVError
from gridpv.econometrics.design import (Design, PanelSpec, check_rank, cluster_vcov,
                                        coef_table, fe_design)


@dataclass
class OlsFit:
    coef: pd.Series
    vcov: np.ndarray
    resid: np.ndarray
    r2: float
    nobs: int
    n_clusters: int
    dropped_levels: dict

    @property
    def se(self) -> pd.Series:
        return pd.Series(np.sqrt(np.diag(self.vcov)), index=self.coef.index)

    def table(self) -> pd.DataFrame:
        return coef_table(self.coef, self.vcov)


@dataclass
class IvFit(OlsFit):
    instrument: str = ""

    @property
    def f_stat(self) -> float:
        """Cluster-robust first-stage F for the single excluded instrument."""
        return float(self.t_stat ** 2)

    @property
    def t_stat(self) -> float:
        return float(self.coef[self.instrument] / self.se[self.instrument])


def ols_cluster(y: np.ndarray, design: Design, clusters) -> OlsFit:
    X = design.X
    check_rank(X, design.names)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    bread = np.linalg.inv(X.T @ X)
    V = cluster_vcov(X * resid[:, None], bread, np.asarray(clusters))
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - float(resid @ resid) / tss if tss > 0 else 0.0
    return OlsFit(pd.Series(beta, index=design.names), V, resid, r2, len(y),
                  len(pd.unique(np.asarray(clusters))), design.dropped_levels)


def _exog(spec: PanelSpec) -> list[str]:
    return ([spec.frequency] if spec.frequency else []) + list(spec.controls)


def fit_first_stage(spec: PanelSpec, frame: pd.DataFrame | None = None) -> IvFit:
    """Regress the treatment on the instrument, exogenous regressors and both fixed effects."""
    df = spec.frame() if frame is None else frame
    design = fe_design(df, [spec.instrument, *_exog(spec)], spec.unit, spec.time)
    fit = ols_cluster(df[spec.treatment].to_numpy(dtype=float), design, df[spec.unit])
    return IvFit(**vars(fit), instrument=spec.instrument)


def anderson_rubin(spec: PanelSpec, beta0: float = 0.0,
                   frame: pd.DataFrame | None = None) -> tuple[float, float]:
    """Weak-instrument-robust test of H0: treatment effect == beta0.

    Regresses ``outcome - beta0 * treatment`` on the instrument and controls and
    returns the cluster-robust Wald chi2(1) statistic on the instrument with its p-value.
    """
    df = spec.frame() if frame is None else frame
    y = df[spec.outcome].to_numpy(dtype=float) - beta0 * df[spec.treatment].to_numpy(dtype=float)
    design = fe_design(df, [spec.instrument, *_exog(spec)], spec.unit, spec.time)
    fit = ols_cluster(y, design, df[spec.unit])
    stat = float(fit.coef[spec.instrument] ** 2 / fit.vcov[1, 1])
    return stat, float(stats.chi2.sf(stat, 1))


def vif(columns) -> pd.Series:
    """Variance inflation factor 1 / (1 - R^2_j) of each column on all the others.

    Exactly collinear columns get ``inf``.
    """
    df = pd.DataFrame(columns)
    n, p = df.shape
    if p < 2:
        raise GridPVError("VIF needs at least two columns")
    if n <= p:
        raise GridPVError("VIF needs more rows than columns")
    X = df.to_numpy(dtype=float)
    out = {}
    for j, name in enumerate(df.columns):
        y = X[:, j]
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        beta, *_ = np.linalg.lstsq(others, y, rcond=None)
        resid = y - others @ beta
        tss = float(np.sum((y - y.mean()) ** 2))
        if tss == 0:
            out[name] = np.inf
            continue
        r2 = 1 - float(resid @ resid) / tss
        out[name] = np.inf if r2 >= 1 - 1e-10 else 1 / (1 - r2)
    return pd.Series(out, name="VIF")
