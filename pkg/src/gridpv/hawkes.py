"""Marked spatio-temporal Hawkes process for outage occurrences.

Ground intensity at substation ``s``::

    lambda_g(t, s) = mu_s * (1 + c t) + phi . X(t, s)
                     + sum_{t_j < t, s_j in N(s)} alpha * beta * exp(-beta (t - t_j))

Marks (duration bin x customer bin) follow a softmax over an affine map of
``[t / time_scale, onehot(s), X(t, s)]``. Times are in days. Covariates are
piecewise constant on the periods of a :class:`CovariateGrid`.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_softmax, logit, softmax

from gridpv import GridPVError, ModelError

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
EARTH_RADIUS_KM = 6371.0088


class HawkesFitError(ModelError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = list(trajectory or [])


@dataclass(frozen=True)
class MarkSpace:
    """Discretised (duration, customers) mark space.

    Bin ``i`` of a dimension covers ``[edges[i], edges[i+1])``; the last bin is
    open-ended. Representatives default to the rounded geometric midpoint of
    each bin (lower edge floored at 1), and 1.5x the lower edge for the open bin.
    Mark index is ``duration_bin * n_customer_bins + customer_bin``.
    """

    duration_edges: tuple = (0, 5, 15, 60, 240)
    customer_edges: tuple = (1, 11, 101, 1001)
    duration_reps: Optional[tuple] = None
    customer_reps: Optional[tuple] = None

    def __post_init__(self):
        for name in ("duration", "customer"):
            edges = getattr(self, f"{name}_edges")
            if list(edges) != sorted(set(edges)):
                raise GridPVError(f"{name}_edges must be strictly increasing")
            reps = getattr(self, f"{name}_reps")
            if reps is None:
                reps = _default_reps(edges)
                object.__setattr__(self, f"{name}_reps", reps)
            if len(reps) != len(edges):
                raise GridPVError(f"{name}_reps must have one value per bin")
            for i, r in enumerate(reps):
                hi = edges[i + 1] if i + 1 < len(edges) else math.inf
                if not edges[i] <= r < hi:
                    raise GridPVError(f"{name} representative {r} outside bin {i}")
        if self.customer_edges[0] < 1:
            raise GridPVError("customer bins must start at >= 1")

    @property
    def n_marks(self) -> int:
        return len(self.duration_edges) * len(self.customer_edges)

    def classify(self, duration, customers) -> np.ndarray:
        d = np.searchsorted(self.duration_edges, np.asarray(duration), side="right") - 1
        c = np.searchsorted(self.customer_edges, np.asarray(customers), side="right") - 1
        if np.any(d < 0) or np.any(c < 0):
            raise GridPVError("mark below the lowest bin edge")
        return d * len(self.customer_edges) + c

    def representatives(self, marks) -> tuple[np.ndarray, np.ndarray]:
        """(duration minutes, customers) integer arrays for mark indices."""
        marks = np.asarray(marks, dtype=np.int64)
        nc = len(self.customer_edges)
        dur = np.asarray(self.duration_reps, dtype=np.int64)[marks // nc]
        cust = np.asarray(self.customer_reps, dtype=np.int64)[marks % nc]
        return dur, cust

    def to_dict(self):
        return {k: list(getattr(self, k)) for k in
                ("duration_edges", "customer_edges", "duration_reps", "customer_reps")}


def _default_reps(edges):
    reps = []
    for i, lo in enumerate(edges):
        if i + 1 < len(edges):
            reps.append(int(round(math.sqrt(max(lo, 1) * edges[i + 1]))))
        else:
            reps.append(int(round(1.5 * lo)))
    return tuple(reps)


@dataclass(frozen=True)
class CovariateGrid:
    """Covariates held constant on periods ``[edges[p], edges[p+1])`` (days).

    ``values`` has shape (n_periods, n_substations, d).
    """

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)
        if values.ndim != 3 or values.shape[0] != len(edges) - 1:
            raise GridPVError("covariate values must be (n_periods, n_substations, d)")
        if np.any(np.diff(edges) <= 0):
            raise GridPVError("covariate period edges must increase")
        if not np.all(np.isfinite(values)):
            raise GridPVError("non-finite covariate values")

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def period(self, t) -> np.ndarray:
        p = np.searchsorted(self.edges, np.asarray(t, dtype=float), side="right") - 1
        if np.any(p < 0) or np.any(p >= len(self.edges) - 1):
            raise GridPVError("time outside the covariate grid")
        return p

    def at(self, t, s) -> np.ndarray:
        return self.values[self.period(t), s]

    def overlaps(self, t0: float, t1: float) -> np.ndarray:
        """Length of each period inside [t0, t1)."""
        if t0 < self.edges[0] or t1 > self.edges[-1]:
            raise GridPVError(f"covariate grid [{self.edges[0]}, {self.edges[-1]}) "
                              f"does not cover [{t0}, {t1})")
        lo = np.maximum(self.edges[:-1], t0)
        hi = np.minimum(self.edges[1:], t1)
        return np.clip(hi - lo, 0.0, None)


@dataclass(frozen=True)
class EventArrays:
    """Time-ordered marked events: days, substation index, mark index."""

    times: np.ndarray
    subs: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.subs, dtype=np.int64)
        m = np.asarray(self.marks, dtype=np.int64)
        if not (t.shape == s.shape == m.shape) or t.ndim != 1:
            raise GridPVError("times, subs and marks must be equal-length vectors")
        if np.any(np.diff(t) < 0):
            raise GridPVError("event times must be nondecreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "subs", s)
        object.__setattr__(self, "marks", m)

    def __len__(self):
        return len(self.times)

    @classmethod
    def empty(cls):
        return cls(np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    def before(self, t: float) -> "EventArrays":
        k = np.searchsorted(self.times, t, side="left")
        return EventArrays(self.times[:k], self.subs[:k], self.marks[:k])

    def window(self, t0: float, t1: float) -> "EventArrays":
        a = np.searchsorted(self.times, t0, side="left")
        b = np.searchsorted(self.times, t1, side="left")
        return EventArrays(self.times[a:b], self.subs[a:b], self.marks[a:b])

    def concat(self, other: "EventArrays") -> "EventArrays":
        return EventArrays(np.concatenate([self.times, other.times]),
                           np.concatenate([self.subs, other.subs]),
                           np.concatenate([self.marks, other.marks]))


def nearest_neighbors(coords: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest substations by great-circle distance, self first."""
    coords = np.radians(np.asarray(coords, dtype=float))
    lon, lat = coords[:, 0], coords[:, 1]
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    a = np.sin(dlat / 2) ** 2 + np.cos(lat[:, None]) * np.cos(lat[None, :]) * np.sin(dlon / 2) ** 2
    dist = 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0, 1)))
    np.fill_diagonal(dist, -1.0)
    k = min(k, len(coords))
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


@dataclass
class HawkesParams:
    mu: np.ndarray
    c: float
    phi: np.ndarray
    alpha: float
    beta: float
    theta: np.ndarray
    neighbors: np.ndarray
    time_scale: float = 1.0

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float).reshape(-1)
        self.theta = np.asarray(self.theta, dtype=float)
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        if self.neighbors.ndim == 1:
            self.neighbors = self.neighbors.reshape(-1, 1)
        self.validate()

    def validate(self):
        S = len(self.mu)
        if not 0.0 <= self.alpha < 1.0:
            raise GridPVError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.beta > 0:
            raise GridPVError(f"beta must be positive, got {self.beta}")
        if np.any(self.mu < 0) or not np.all(np.isfinite(self.mu)):
            raise GridPVError("mu must be finite and nonnegative")
        if self.neighbors.shape[0] != S:
            raise GridPVError("neighbors must have one row per substation")
        if np.any(self.neighbors[:, 0] != np.arange(S)):
            raise GridPVError("each neighbourhood must list its own substation first")
        if self.theta.ndim != 2 or self.theta.shape[1] != 1 + S + self.d:
            raise GridPVError(f"theta must be (n_marks, {1 + S + self.d})")
        if self.time_scale <= 0:
            raise GridPVError("time_scale must be positive")

    @property
    def n_subs(self) -> int:
        return len(self.mu)

    @property
    def d(self) -> int:
        return len(self.phi)

    @property
    def n_marks(self) -> int:
        return self.theta.shape[0]

    @property
    def k_nn(self) -> int:
        return self.neighbors.shape[1]

    @property
    def adjacency(self) -> np.ndarray:
        """A[s, s'] = 1 when events at s' excite s."""
        A = np.zeros((self.n_subs, self.n_subs))
        A[np.repeat(np.arange(self.n_subs), self.k_nn), self.neighbors.ravel()] = 1.0
        return A

    @property
    def influence_counts(self) -> np.ndarray:
        """Number of substations each source substation excites."""
        return self.adjacency.sum(axis=0)

    @property
    def branching_ratio(self) -> float:
        """Spectral radius of the mean offspring matrix; < 1 means a stable process."""
        if self.alpha == 0:
            return 0.0
        return float(self.alpha * np.max(np.abs(np.linalg.eigvals(self.adjacency))))

    def copy(self, **changes) -> "HawkesParams":
        fields_ = dict(mu=self.mu.copy(), c=self.c, phi=self.phi.copy(), alpha=self.alpha,
                       beta=self.beta, theta=self.theta.copy(), neighbors=self.neighbors.copy(),
                       time_scale=self.time_scale)
        fields_.update(changes)
        return HawkesParams(**fields_)

    def check_base_rate(self, t0: float, t1: float, covariates: Optional[CovariateGrid] = None):
        """Raise if mu_s (1 + c t) + phi . X goes negative anywhere on [t0, t1]."""
        lin = np.minimum(1 + self.c * t0, 1 + self.c * t1)
        base = self.mu * lin
        if self.d and covariates is not None:
            p = np.flatnonzero(covariates.overlaps(t0, t1) > 0)
            base = base + (covariates.values[p] @ self.phi).min(axis=0)
        if np.any(base < 0):
            raise ModelError("base rate becomes negative inside the horizon")

    @classmethod
    def poisson(cls, mu, n_marks=1, **kw) -> "HawkesParams":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        S = len(mu)
        kw.setdefault("neighbors", np.arange(S).reshape(-1, 1))
        kw.setdefault("theta", np.zeros((n_marks, 1 + S)))
        kw.setdefault("phi", np.zeros(0))
        return cls(mu=mu, c=kw.pop("c", 0.0), alpha=kw.pop("alpha", 0.0),
                   beta=kw.pop("beta", 1.0), **kw)


def _mark_features(times, subs, params: HawkesParams, covariates: Optional[CovariateGrid]):
    n = len(times)
    F = np.zeros((n, 1 + params.n_subs + params.d))
    F[:, 0] = np.asarray(times) / params.time_scale
    F[np.arange(n), 1 + np.asarray(subs)] = 1.0
    if params.d:
        F[:, 1 + params.n_subs:] = covariates.at(times, subs)
    return F


def _covariate_rows(times, subs, params, covariates):
    if not params.d:
        return np.zeros((len(times), 0))
    if covariates is None:
        raise GridPVError("covariates required: phi has nonzero length")
    if covariates.dim != params.d:
        raise GridPVError("covariate dimension does not match phi")
    return covariates.at(times, subs)


def base_rate(t, s, params: HawkesParams, covariates: Optional[CovariateGrid] = None):
    x = _covariate_rows(np.atleast_1d(t), np.atleast_1d(s), params, covariates)
    val = params.mu[s] * (1 + params.c * np.asarray(t)) + (x @ params.phi if params.d else 0.0)
    return np.squeeze(val)[()]


def ground_intensity(t: float, s: int, history: EventArrays, params: HawkesParams,
                     covariates: Optional[CovariateGrid] = None) -> float:
    """lambda_g(t, s) given events strictly before t."""
    prior = history.before(t)
    if len(prior) != len(history) and np.any(history.times > t):
        raise GridPVError("history contains events after t")
    mask = np.isin(prior.subs, params.neighbors[s])
    exc = params.alpha * params.beta * np.exp(-params.beta * (t - prior.times[mask])).sum()
    lam = float(base_rate(t, s, params, covariates)) + exc
    if lam < 0:
        raise ModelError(f"negative intensity {lam:.6g} at t={t}, s={s}")
    return lam


def mark_distribution(t: float, s: int, x: Optional[np.ndarray], params: HawkesParams) -> np.ndarray:
    """Softmax probabilities over the mark space at (t, s) with covariate row x."""
    f = np.zeros(1 + params.n_subs + params.d)
    f[0] = t / params.time_scale
    f[1 + s] = 1.0
    if params.d:
        f[1 + params.n_subs:] = x
    return softmax(params.theta @ f)


def _excitation_sums(events: EventArrays, params: HawkesParams, beta: float):
    """A_i = sum exp(-beta dt), B_i = sum dt exp(-beta dt) over exciting events before t_i."""
    n = len(events)
    A = np.zeros(n)
    B = np.zeros(n)
    times = events.times.tolist()
    subs = events.subs
    for s in range(params.n_subs):
        src = np.flatnonzero(np.isin(subs, params.neighbors[s])).tolist()
        is_tgt = (subs == s)
        a = b = 0.0
        t_cur = -math.inf
        n_cur = 0
        for j in src:
            t = times[j]
            if t > t_cur:
                if a:
                    dt = t - t_cur
                    e = math.exp(-beta * dt)
                    b = e * (b + dt * a)
                    a = e * a
                t_cur = t
                n_cur = 0
            if is_tgt[j]:
                A[j] = a - n_cur
                B[j] = b
            a += 1.0
            n_cur += 1
    return A, B


def _check_window(events: EventArrays, T: float, params: HawkesParams):
    if T <= 0:
        raise GridPVError("horizon T must be positive")
    if len(events) and (events.times[0] < 0 or events.times[-1] >= T):
        raise GridPVError("events must lie in [0, T)")
    if len(events) and (events.subs.max() >= params.n_subs or events.subs.min() < 0):
        raise GridPVError("event substation index out of range")
    if len(events) and (events.marks.max() >= params.n_marks or events.marks.min() < 0):
        raise GridPVError("event mark index out of range")


def compensator(params: HawkesParams, events: EventArrays, T: float,
                covariates: Optional[CovariateGrid] = None) -> float:
    """sum_s integral_0^T lambda_g(t, s) dt in closed form."""
    _check_window(events, T, params)
    total = params.mu.sum() * (T + params.c * T * T / 2)
    if params.d:
        L = covariates.overlaps(0.0, T)
        total += float(np.einsum("p,psd,d->", L, covariates.values, params.phi))
    w = params.influence_counts[events.subs]
    total += params.alpha * float(np.sum(w * -np.expm1(-params.beta * (T - events.times))))
    return float(total)


def _ground_terms(params: HawkesParams, events: EventArrays, T: float,
                  covariates: Optional[CovariateGrid], need_grad: bool):
    mu, c, phi, alpha, beta = params.mu, params.c, params.phi, params.alpha, params.beta
    t, s = events.times, events.subs
    X = _covariate_rows(t, s, params, covariates)
    A, B = _excitation_sums(events, params, beta)
    base = mu[s] * (1 + c * t) + (X @ phi if params.d else 0.0)
    lam = base + alpha * beta * A
    if np.any(lam <= 0):
        raise ModelError("nonpositive intensity at an observed event")
    comp = compensator(params, events, T, covariates)
    ll = float(np.sum(np.log(lam))) - comp
    if not need_grad:
        return ll, None
    inv = 1.0 / lam
    w = params.influence_counts[s]
    decay = np.exp(-beta * (T - t))
    g_mu = np.bincount(s, weights=(1 + c * t) * inv, minlength=params.n_subs) - (T + c * T * T / 2)
    g_c = float(np.sum(mu[s] * t * inv) - mu.sum() * T * T / 2)
    if params.d:
        L = covariates.overlaps(0.0, T)
        g_phi = X.T @ inv - np.einsum("p,psd->d", L, covariates.values)
    else:
        g_phi = np.zeros(0)
    g_alpha = float(np.sum(beta * A * inv) - np.sum(w * (1 - decay)))
    g_beta = float(np.sum(alpha * (A - beta * B) * inv) - alpha * np.sum(w * (T - t) * decay))
    return ll, dict(mu=g_mu, c=g_c, phi=g_phi, alpha=g_alpha, beta=g_beta)


def _mark_terms(params: HawkesParams, events: EventArrays, covariates, need_grad: bool):
    F = _mark_features(events.times, events.subs, params, covariates)
    logp = log_softmax(F @ params.theta.T, axis=1)
    ll = float(logp[np.arange(len(events)), events.marks].sum())
    if not need_grad:
        return ll, None
    resid = -np.exp(logp)
    resid[np.arange(len(events)), events.marks] += 1.0
    return ll, resid.T @ F


def log_likelihood(params: HawkesParams, events: EventArrays, T: float,
                   covariates: Optional[CovariateGrid] = None) -> float:
    """Sum over events of log lambda_g + log f(mark), minus the compensator."""
    _check_window(events, T, params)
    lg, _ = _ground_terms(params, events, T, covariates, need_grad=False)
    lm, _ = _mark_terms(params, events, covariates, need_grad=False)
    return lg + lm


def log_likelihood_grad(params: HawkesParams, events: EventArrays, T: float,
                        covariates: Optional[CovariateGrid] = None):
    """Log-likelihood and its gradient w.r.t. (mu, c, phi, alpha, beta, theta)."""
    _check_window(events, T, params)
    lg, grad = _ground_terms(params, events, T, covariates, need_grad=True)
    lm, g_theta = _mark_terms(params, events, covariates, need_grad=True)
    grad["theta"] = g_theta
    return lg + lm, grad


@dataclass
class FitConfig:
    learning_rate: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-8
    seed: int = 0
    mark_ridge: float = 1e-3
    fit_trend: bool = True          # False pins the linear trend c at 0


@dataclass
class HawkesFit:
    params: HawkesParams
    log_likelihood: float
    n_iter: int
    trajectory: list = field(default_factory=list)


class _GroundObjective:
    """Negative ground log-likelihood over unconstrained coordinates.

    z = [log mu (S), log(1 + c T), phi (d), logit alpha, log beta]; the map on
    c keeps the linear trend positive on [0, T].
    """

    def __init__(self, template: HawkesParams, events, T, covariates):
        self.template = template
        self.events = events
        self.T = T
        self.cov = covariates
        self.S = template.n_subs
        self.d = template.d

    def unpack(self, z):
        S, d, T = self.S, self.d, self.T
        return self.template.copy(
            mu=np.exp(z[:S]), c=float(np.expm1(z[S]) / T), phi=z[S + 1:S + 1 + d],
            alpha=float(expit(z[S + 1 + d])), beta=float(np.exp(z[S + 2 + d])))

    def pack(self, p: HawkesParams):
        alpha = min(max(p.alpha, 1e-6), 1 - 1e-6)
        return np.concatenate([np.log(p.mu), [math.log1p(p.c * self.T)], p.phi,
                               [logit(alpha), math.log(p.beta)]])

    def __call__(self, z):
        try:
            p = self.unpack(z)
            ll, g = _ground_terms(p, self.events, self.T, self.cov, need_grad=True)
        except (ModelError, GridPVError, FloatingPointError):
            return 1e100, np.zeros_like(z)
        if not math.isfinite(ll):
            return 1e100, np.zeros_like(z)
        S, d, T = self.S, self.d, self.T
        gz = np.empty_like(z)
        gz[:S] = g["mu"] * p.mu
        gz[S] = g["c"] * (1 + p.c * T) / T
        gz[S + 1:S + 1 + d] = g["phi"]
        gz[S + 1 + d] = g["alpha"] * p.alpha * (1 - p.alpha)
        gz[S + 2 + d] = g["beta"] * p.beta
        return -ll, -gz


def _run_lbfgs(fun, z0, config: FitConfig, what: str, bounds=None):
    trajectory = []

    def record(zk):
        trajectory.append(float(fun(zk)[0]))

    res = minimize(fun, z0, jac=True, method="L-BFGS-B", callback=record, bounds=bounds,
                   options=dict(maxiter=config.max_iter, ftol=config.tol, gtol=1e-9,
                                maxcor=20))
    if res.status == 1 or not np.all(np.isfinite(res.x)) or res.fun >= 1e99:
        raise HawkesFitError(f"{what} fit did not converge: {res.message}", trajectory)
    return res, trajectory


def fit_marks(template: HawkesParams, events: EventArrays, covariates=None,
              config: FitConfig = FitConfig()) -> tuple[np.ndarray, int]:
    """Multinomial-logit mark weights with a small ridge penalty."""
    F = _mark_features(events.times, events.subs, template, covariates)
    M = template.n_marks
    Y = np.zeros((len(events), M))
    Y[np.arange(len(events)), events.marks] = 1.0
    lam = config.mark_ridge

    def fun(w):
        W = w.reshape(M, -1)
        logp = log_softmax(F @ W.T, axis=1)
        ll = float((Y * logp).sum()) - 0.5 * lam * float(w @ w)
        G = (Y - np.exp(logp)).T @ F - lam * W
        return -ll, -G.ravel()

    res, _ = _run_lbfgs(fun, np.zeros(M * F.shape[1]), config, "mark")
    return res.x.reshape(M, -1), int(res.nit)


def fit_mle(events: EventArrays, T: float, n_subs: int, n_marks: int,
            neighbors: Optional[np.ndarray] = None, covariates: Optional[CovariateGrid] = None,
            config: FitConfig = FitConfig()) -> HawkesFit:
    """Maximum-likelihood fit of all Hawkes parameters.

    The likelihood separates into a ground part and a mark part, which are
    maximised independently with L-BFGS on unconstrained coordinates.
    """
    if len(events) < 1:
        raise GridPVError("need at least one event to fit")
    if neighbors is None:
        neighbors = np.arange(n_subs).reshape(-1, 1)
    d = covariates.dim if covariates is not None else 0
    counts = np.bincount(events.subs, minlength=n_subs).astype(float)
    rng = np.random.default_rng(config.seed)
    mu0 = np.maximum(counts, 0.5) / (2 * T) * np.exp(rng.normal(0, 1e-3, n_subs))
    template = HawkesParams(mu=mu0, c=0.0, phi=np.zeros(d), alpha=0.3, beta=1.0,
                            theta=np.zeros((n_marks, 1 + n_subs + d)), neighbors=neighbors,
                            time_scale=T)
    _check_window(events, T, template)
    obj = _GroundObjective(template, events, T, covariates)
    bounds = None
    if not config.fit_trend:
        bounds = [(None, None)] * (n_subs + d + 3)
        bounds[n_subs] = (0.0, 0.0)
    res, trajectory = _run_lbfgs(obj, obj.pack(template), config, "ground", bounds)
    ground = obj.unpack(res.x)
    theta, nit_marks = fit_marks(template, events, covariates, config)
    params = ground.copy(theta=theta)
    if params.d:
        params.check_base_rate(0.0, T, covariates)
    if params.branching_ratio >= 1:
        log.warning("fitted process is explosive: branching ratio %.3f", params.branching_ratio)
    ll = log_likelihood(params, events, T, covariates)
    log.info("hawkes fit: ll=%.6g iterations=%d/%d", ll, res.nit, nit_marks)
    return HawkesFit(params, ll, int(res.nit) + nit_marks, [-v for v in trajectory])


# -- serialisation -------------------------------------------------------------------------

def params_to_dict(params: HawkesParams) -> dict:
    return dict(mu=params.mu.tolist(), c=params.c, phi=params.phi.tolist(), alpha=params.alpha,
                beta=params.beta, theta=params.theta.tolist(),
                neighbors=params.neighbors.tolist(), k_nn=params.k_nn,
                time_scale=params.time_scale)


def params_from_dict(doc: dict) -> HawkesParams:
    return HawkesParams(mu=doc["mu"], c=doc["c"], phi=doc["phi"], alpha=doc["alpha"],
                        beta=doc["beta"], theta=doc["theta"], neighbors=doc["neighbors"],
                        time_scale=doc["time_scale"])


def save_model(path, params: HawkesParams, mark_space: MarkSpace, substation_ids: Sequence[str],
               origin: str, covariate_info: Optional[dict] = None, fit_info: Optional[dict] = None):
    doc = dict(format="gridpv-hawkes", version=FORMAT_VERSION, origin=origin,
               substation_ids=list(substation_ids), params=params_to_dict(params),
               mark_space=mark_space.to_dict(), covariates=covariate_info or {},
               fit=fit_info or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "gridpv-hawkes":
        raise GridPVError(f"{path}: not a gridpv Hawkes model file")
    if doc.get("version") != FORMAT_VERSION:
        raise GridPVError(f"{path}: unsupported model version {doc.get('version')}")
    doc["params"] = params_from_dict(doc["params"])
    doc["mark_space"] = MarkSpace(**{k: tuple(v) for k, v in doc["mark_space"].items()})
    return doc
