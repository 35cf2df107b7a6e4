"""Split-conformal calibration of simulation ensembles.

Scores are the distance from the observation to the closest simulated value;
intervals widen the ensemble range by the per-substation score quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gridpv import GridPVError


@dataclass(frozen=True)
class PredictionInterval:
    timestep: int
    substation: int
    point: float
    lower: float
    upper: float
    level: float


def nonconformity_scores(ensemble: np.ndarray, actual: np.ndarray) -> np.ndarray:
    """r[i, s] = min_k |ensemble[i, s, k] - actual[i, s]|.

    ``ensemble`` is (n, S, K) and ``actual`` is (n, S).
    """
    ensemble = np.asarray(ensemble, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if ensemble.ndim != 3 or ensemble.shape[:2] != actual.shape:
        raise GridPVError(f"ensemble {ensemble.shape} does not match actuals {actual.shape}")
    if ensemble.shape[2] < 1:
        raise GridPVError("ensemble needs at least one replication")
    return np.abs(ensemble - actual[:, :, None]).min(axis=2)


def conformal_quantile(residuals: Sequence[float], alpha: float) -> float:
    """The ceil((1 - alpha)(n + 1))-th smallest residual, capped at the largest."""
    r = np.sort(np.asarray(residuals, dtype=float).ravel())
    n = len(r)
    if n == 0:
        raise GridPVError("no residuals to calibrate on")
    if not 0 < alpha < 1:
        raise GridPVError("alpha must lie in (0, 1)")
    # guard the ceiling against representation error in (1 - alpha)(n + 1)
    k = math.ceil(round((1 - alpha) * (n + 1), 9))
    return float(r[min(k, n) - 1])


def substation_quantiles(residuals: np.ndarray, alpha: float) -> np.ndarray:
    """Per-substation quantiles from an (n, S) residual matrix."""
    residuals = np.asarray(residuals, dtype=float)
    return np.array([conformal_quantile(residuals[:, s], alpha) for s in range(residuals.shape[1])])


def prediction_interval(ensemble: np.ndarray, q: np.ndarray, alpha: float, point_index: int = 0,
                        nonnegative: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Point, lower and upper arrays for a future ensemble.

    ``ensemble`` is (m, S, K) or (S, K); ``q`` holds one quantile per substation.
    The point forecast is replication ``point_index``.
    """
    ensemble = np.asarray(ensemble, dtype=float)
    q = np.asarray(q, dtype=float)
    lower = ensemble.min(axis=-1) - q
    upper = ensemble.max(axis=-1) + q
    if nonnegative:
        lower = np.maximum(lower, 0.0)
    return ensemble[..., point_index], lower, upper


def intervals(ensemble: np.ndarray, q: np.ndarray, alpha: float, point_index: int = 0,
              nonnegative: bool = True, first_timestep: int = 0) -> list[PredictionInterval]:
    point, lower, upper = prediction_interval(ensemble, q, alpha, point_index, nonnegative)
    out = []
    for i in range(point.shape[0]):
        for s in range(point.shape[1]):
            out.append(PredictionInterval(first_timestep + i, s, float(point[i, s]),
                                          float(lower[i, s]), float(upper[i, s]), 1 - alpha))
    return out


def empirical_coverage(lower, upper, actual) -> float:
    lower, upper, actual = (np.asarray(a, dtype=float) for a in (lower, upper, actual))
    if not (lower.shape == upper.shape == actual.shape):
        raise GridPVError("interval and actual shapes differ")
    if actual.size == 0:
        raise GridPVError("nothing to evaluate")
    return float(np.mean((actual >= lower) & (actual <= upper)))
