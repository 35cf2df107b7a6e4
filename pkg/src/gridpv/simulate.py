"""Thinning simulation of the marked Hawkes model and aggregation into index matrices."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from gridpv import GridPVError, ModelError
from gridpv.hawkes import CovariateGrid, EventArrays, HawkesParams, MarkSpace, mark_distribution
from gridpv.reliability import compute_caidi

METRICS = ("SAIDI", "SAIFI", "CAIDI")


@dataclass(frozen=True)
class SimulatedTrajectory:
    events: EventArrays
    t0: float
    t1: float
    seed: object = None
    replication: int = 0


@dataclass(frozen=True)
class IndexMatrix:
    """Reliability index values of shape (n_windows, n_substations, K)."""

    metric: str
    values: np.ndarray
    edges: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def K(self):
        return self.values.shape[2]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def child_seed(master_seed: int, k: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(stream), int(k)])


def _excitation_state(params: HawkesParams, history: EventArrays, t: float) -> np.ndarray:
    """Per-source-substation sum of exp(-beta (t - t_j)) over history."""
    state = np.zeros(params.n_subs)
    if len(history):
        np.add.at(state, history.subs, np.exp(-params.beta * (t - history.times)))
    return state


def thinning_simulate(params: HawkesParams, history: EventArrays, horizon: float, seed=None,
                      t0: float = 0.0, covariates: Optional[CovariateGrid] = None
                      ) -> SimulatedTrajectory:
    """Draw events on ``[t0, t0 + horizon)`` given ``history`` (Ogata thinning).

    The dominating rate is recomputed after every candidate: the base part is
    bounded by its maximum over the current covariate period (the linear trend
    peaks at an endpoint) and the excitation part by its current value, which
    only decays until the next accepted event. A candidate at time t is kept
    with probability sum_s lambda_g(t, s) / bound, its substation drawn in
    proportion to lambda_g(t, s), and its mark from the mark distribution.
    """
    if horizon <= 0:
        raise GridPVError("horizon must be positive")
    if len(history) and history.times[-1] >= t0:
        raise GridPVError("history must end before the simulation start")
    if params.d and covariates is None:
        raise GridPVError("covariates required: phi has nonzero length")
    rng = _rng(seed)
    t_end = t0 + horizon
    S = params.n_subs
    A = params.adjacency
    ab = params.alpha * params.beta
    beta = params.beta
    mu, c = params.mu, params.c
    state = _excitation_state(params, history, t0)
    marks_all = np.arange(params.n_marks)

    times, subs, marks = [], [], []
    t = t0
    while t < t_end:
        if params.d:
            p = int(covariates.period(t))
            t_stop = min(t_end, float(covariates.edges[p + 1]))
            cov_term = covariates.values[p] @ params.phi
        else:
            t_stop = t_end
            cov_term = 0.0
        base_hi = mu * max(1 + c * t, 1 + c * t_stop) + cov_term
        exc = ab * (A @ state) if ab else np.zeros(S)
        bound = float(np.sum(base_hi + exc))
        if not math.isfinite(bound):
            raise ModelError(f"intensity bound is not finite at t={t}")
        if bound < 0:
            raise ModelError(f"negative intensity bound at t={t}")
        if bound == 0:
            gap = math.inf
        else:
            gap = rng.exponential(1.0 / bound)
        t_new = t + gap
        if t_new >= t_stop:
            state *= math.exp(-beta * (t_stop - t))
            t = t_stop
            continue
        state *= math.exp(-beta * (t_new - t))
        t = t_new
        lam = mu * (1 + c * t) + cov_term + (ab * (A @ state) if ab else 0.0)
        if np.any(lam < 0):
            raise ModelError(f"negative intensity at t={t}")
        total = float(lam.sum())
        if rng.uniform() * bound <= total:
            s = int(rng.choice(S, p=lam / total)) if S > 1 else 0
            x = covariates.values[p, s] if params.d else None
            probs = mark_distribution(t, s, x, params)
            m = int(rng.choice(marks_all, p=probs)) if params.n_marks > 1 else 0
            times.append(t)
            subs.append(s)
            marks.append(m)
            state[s] += 1.0
    ev = EventArrays(np.array(times, dtype=float), np.array(subs, dtype=np.int64),
                     np.array(marks, dtype=np.int64))
    return SimulatedTrajectory(ev, t0, t_end, seed)


def window_edges(t0: float, n_windows: int, dt: float) -> np.ndarray:
    return t0 + dt * np.arange(n_windows + 1)


def simulate_path(params: HawkesParams, history: EventArrays, edges: Sequence[float], seed=None,
                  covariates: Optional[CovariateGrid] = None, replication: int = 0
                  ) -> SimulatedTrajectory:
    """Slide the simulation window across ``edges``, feeding each window's events back
    into the history of the next."""
    edges = np.asarray(edges, dtype=float)
    rng = _rng(seed)
    hist = history
    start = len(history)
    for a, b in zip(edges[:-1], edges[1:]):
        traj = thinning_simulate(params, hist, b - a, rng, t0=a, covariates=covariates)
        hist = hist.concat(traj.events)
    sim = EventArrays(hist.times[start:], hist.subs[start:], hist.marks[start:])
    return SimulatedTrajectory(sim, float(edges[0]), float(edges[-1]), seed, replication)


def simulate_ensemble(params: HawkesParams, history: EventArrays, edges: Sequence[float],
                      K: int, master_seed: int, covariates: Optional[CovariateGrid] = None,
                      threads: int = 1, stream: int = 0) -> list[SimulatedTrajectory]:
    """K independent paths; path k uses the child seed derived from (master_seed, stream, k)."""
    if K < 1:
        raise GridPVError("K must be >= 1")
    params.check_base_rate(float(edges[0]), float(edges[-1]), covariates)

    def one(k):
        return simulate_path(params, history, edges, child_seed(master_seed, k, stream), covariates, k)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, range(K)))
    return [one(k) for k in range(K)]


def aggregate_indices(events: EventArrays, customers: Sequence[int], edges: Sequence[float],
                      mark_space: MarkSpace) -> dict[str, np.ndarray]:
    """SAIDI/SAIFI/CAIDI per (window, substation) from mark representatives.

    Returns a dict of (n_windows, n_substations) arrays.
    """
    customers = np.asarray(customers, dtype=np.int64)
    edges = np.asarray(edges, dtype=float)
    n, S = len(edges) - 1, len(customers)
    if len(events) and events.subs.max() >= S:
        raise GridPVError("simulated substation missing from registry")
    cm = np.zeros((n, S), dtype=np.int64)
    ci = np.zeros((n, S), dtype=np.int64)
    w = np.searchsorted(edges, events.times, side="right") - 1
    keep = (w >= 0) & (w < n)
    dur, cust = mark_space.representatives(events.marks[keep])
    np.add.at(cm, (w[keep], events.subs[keep]), dur * cust)
    np.add.at(ci, (w[keep], events.subs[keep]), cust)
    saidi = cm / customers
    saifi = ci / customers
    caidi = np.zeros_like(saidi)
    nz = saifi > 0
    caidi[nz] = saidi[nz] / saifi[nz]
    return {"SAIDI": saidi, "SAIFI": saifi, "CAIDI": caidi}


def aggregate_ensemble(trajectories: Sequence[SimulatedTrajectory], customers, edges,
                       mark_space: MarkSpace) -> dict[str, IndexMatrix]:
    per = [aggregate_indices(tr.events, customers, edges, mark_space) for tr in trajectories]
    edges = np.asarray(edges, dtype=float)
    return {m: IndexMatrix(m, np.stack([p[m] for p in per], axis=2), edges) for m in METRICS}


def caidi_matrix(saidi: np.ndarray, saifi: np.ndarray) -> np.ndarray:
    out = np.zeros_like(saidi, dtype=float)
    for idx in np.ndindex(saidi.shape):
        out[idx] = compute_caidi(saidi[idx], saifi[idx])
    return out
