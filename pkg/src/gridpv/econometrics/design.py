"""Panel specification, fixed-effect design matrices and cluster-robust covariances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from gridpv import GridPVError, ModelError

UNIT_FE = "fe_unit"
TIME_FE = "fe_time"


class RankDeficientError(ModelError):
    pass


@dataclass
class PanelSpec:
    """Column roles for the two-part IV model.

    ``time`` holds the fixed-effect period (year-quarter). When it is absent
    it is derived from the ``month`` column.
    """

    data: pd.DataFrame
    outcome: str = "Y"
    treatment: str = "S_3"
    frequency: Optional[str] = "F_3"
    instrument: str = "G_3"
    controls: Sequence[str] = field(default_factory=list)
    unit: str = "substation_id"
    time: str = "quarter"
    month: str = "month"

    @property
    def columns(self) -> list[str]:
        cols = [self.outcome, self.treatment, self.instrument, *self.controls]
        if self.frequency:
            cols.append(self.frequency)
        return cols

    def frame(self) -> pd.DataFrame:
        """Estimation sample: rows with every selected column available."""
        df = self.data
        missing = [c for c in self.columns + [self.unit] if c not in df.columns]
        if missing:
            raise GridPVError(f"panel is missing columns {missing}")
        if self.time not in df.columns:
            if self.month not in df.columns:
                raise GridPVError(f"panel needs a {self.time!r} or {self.month!r} column")
            df = df.copy()
            df[self.time] = pd.PeriodIndex(df[self.month], freq="M").asfreq("Q").astype(str)
        df = df.dropna(subset=self.columns).reset_index(drop=True)
        bad = ~np.isfinite(df[self.columns].to_numpy(dtype=float))
        if bad.any():
            raise GridPVError("non-finite values in selected panel columns")
        if df[self.unit].nunique() < 2:
            raise ModelError("need at least two clusters")
        return df

    def with_data(self, data: pd.DataFrame) -> "PanelSpec":
        return PanelSpec(data, self.outcome, self.treatment, self.frequency, self.instrument,
                         list(self.controls), self.unit, self.time, self.month)


@dataclass
class Design:
    X: np.ndarray
    names: list[str]
    dropped_levels: dict


def fe_design(df: pd.DataFrame, regressors: Sequence[str], unit: str, time: str,
              fixed_effects: bool = True) -> Design:
    """Intercept, regressors, then time and unit dummies (first level of each dropped)."""
    cols = [np.ones(len(df))]
    names = ["const"]
    for r in regressors:
        cols.append(df[r].to_numpy(dtype=float))
        names.append(r)
    dropped = {}
    if fixed_effects:
        for tag, col in ((TIME_FE, time), (UNIT_FE, unit)):
            levels = sorted(df[col].astype(str).unique())
            dropped[tag] = levels[0]
            values = df[col].astype(str).to_numpy()
            for lev in levels[1:]:
                cols.append((values == lev).astype(float))
                names.append(f"{tag}[{lev}]")
    X = np.column_stack(cols)
    return Design(X, names, dropped)


def design_like(df: pd.DataFrame, names: Sequence[str], unit: str, time: str,
                overrides: Optional[dict] = None) -> np.ndarray:
    """Rebuild a design with the given column names for new rows.

    Dummies for levels absent from ``names`` are the baseline (all zero).
    ``overrides`` maps a regressor name to a replacement value or array.
    """
    overrides = overrides or {}
    units = df[unit].astype(str).to_numpy()
    times = df[time].astype(str).to_numpy()
    X = np.empty((len(df), len(names)))
    for j, name in enumerate(names):
        if name == "const":
            X[:, j] = 1.0
        elif name.startswith(UNIT_FE + "["):
            X[:, j] = units == name[len(UNIT_FE) + 1:-1]
        elif name.startswith(TIME_FE + "["):
            X[:, j] = times == name[len(TIME_FE) + 1:-1]
        elif name in overrides:
            X[:, j] = overrides[name]
        else:
            X[:, j] = df[name].to_numpy(dtype=float)
    return X


def check_rank(X: np.ndarray, names: Sequence[str]):
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        raise RankDeficientError(f"rank-deficient design: rank {rank} < {X.shape[1]} columns")


def cluster_vcov(scores: np.ndarray, bread: np.ndarray, clusters: np.ndarray) -> np.ndarray:
    """CR1 sandwich: G/(G-1) (N-1)/(N-k) * bread @ sum_g s_g s_g' @ bread."""
    codes, uniq = pd.factorize(pd.Series(clusters).astype(str))
    G = len(uniq)
    if G < 2:
        raise ModelError("need at least two clusters")
    n, k = scores.shape
    Sg = np.zeros((G, k))
    np.add.at(Sg, codes, scores)
    meat = Sg.T @ Sg
    factor = G / (G - 1) * (n - 1) / (n - k)
    V = factor * bread @ meat @ bread
    return (V + V.T) / 2


def stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def coef_table(coef: pd.Series, vcov: np.ndarray) -> pd.DataFrame:
    se = np.sqrt(np.diag(vcov))
    z = coef.to_numpy() / se
    p = 2 * stats.norm.sf(np.abs(z))
    return pd.DataFrame({"coef": coef.to_numpy(), "se": se, "z": z, "p": p,
                         "stars": [stars(v) for v in p]}, index=coef.index)
