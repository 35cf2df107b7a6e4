"""Synthetic datasets with known ground truth.

``gen_hawkes_dataset`` draws outages from a marked Hawkes model and writes
them in the ingest CSV schemas; ``gen_twopart_panel`` draws a substation x
month panel whose outcome follows the two-part control-function model.
Both are pure functions of (spec, seed).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import timedelta
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import expit

from gridpv import GridPVError
from gridpv.hawkes import EventArrays, HawkesParams, MarkSpace, nearest_neighbors
from gridpv.ingest import (OutageEvent, SubstationRecord, SubstationRegistry, month_range,
                           month_start, write_events, write_registry)
from gridpv.simulate import thinning_simulate

log = logging.getLogger(__name__)

TRUTH_VERSION = 1
# rough bounding box of a mid-size US city service territory
LON_RANGE = (-86.33, -86.0)
LAT_RANGE = (39.63, 39.93)


@dataclass
class HawkesDgp:
    n_subs: int = 5
    mu: float = 0.05
    c: float = 0.0
    alpha: float = 0.5
    beta: float = 1.0
    k_nn: int = 1
    horizon_days: float = 365.0
    start_month: str = "2014-01"
    customers_mean: int = 8600
    mark_logits: Optional[list] = None


@dataclass
class PanelDgp:
    n_units: int = 44
    n_months: int = 111
    start_month: str = "2014-01"
    horizon: int = 3
    # first stage: S = a0 + a1 G + a_x . x + unit/time effects + v
    a0: float = 60.0
    a1: float = 3.5
    a_x: tuple = (5.0, -3.0)
    g_mean: float = 30.0
    g_sd: float = 6.0
    sigma_v: float = 20.0
    fe_scale_s: float = 10.0
    # participation index: b . (S, F, x) + rho_logit v + effects + logistic noise
    b: tuple = (0.01, -0.2, 0.3, -0.2)
    rho_logit: float = 0.02
    zero_fraction: float = 0.5
    # magnitude: exp(g0 + g . (S, F, x) + rho_glm v + effects) * lognormal(sigma_y)
    g0: float = -7.8
    g: tuple = (-0.004, 0.05, 0.2, 0.1)
    rho_glm: float = 0.01
    sigma_y: float = 0.5
    fe_scale: float = 0.3

    def __post_init__(self):
        if self.n_units < 2:
            raise GridPVError("need at least two clusters")
        if self.sigma_v <= 0 or self.sigma_y < 0 or self.g_sd <= 0:
            raise GridPVError("degenerate noise scales")
        if not 0 < self.zero_fraction < 1:
            raise GridPVError("zero_fraction must lie in (0, 1)")


def _registry(n: int, customers_mean: int, rng) -> SubstationRegistry:
    lon = rng.uniform(*LON_RANGE, n)
    lat = rng.uniform(*LAT_RANGE, n)
    cust = rng.integers(int(customers_mean * 0.7), int(customers_mean * 1.3) + 1, n)
    return SubstationRegistry(
        SubstationRecord(f"SUB{i + 1:03d}", round(float(lon[i]), 6), round(float(lat[i]), 6),
                         int(cust[i])) for i in range(n))


def hawkes_params_for(spec: HawkesDgp, registry: SubstationRegistry, mark_space: MarkSpace) -> HawkesParams:
    S = len(registry)
    theta = np.zeros((mark_space.n_marks, 1 + S))
    if spec.mark_logits is not None:
        logits = np.asarray(spec.mark_logits, dtype=float)
        if logits.shape != (mark_space.n_marks,):
            raise GridPVError(f"mark_logits must have {mark_space.n_marks} entries")
        # one-hot substation features always sum to one, so this acts as an intercept
        theta[:, 1:] = logits[:, None]
    return HawkesParams(mu=np.full(S, spec.mu), c=spec.c, phi=np.zeros(0), alpha=spec.alpha,
                        beta=spec.beta, theta=theta,
                        neighbors=nearest_neighbors(registry.coords, spec.k_nn),
                        time_scale=spec.horizon_days)


def simulate_hawkes_events(spec: HawkesDgp, seed: int, mark_space: MarkSpace = MarkSpace()):
    """Registry, generating parameters and simulated events (as arrays)."""
    rng = np.random.default_rng([seed, 0])
    registry = _registry(spec.n_subs, spec.customers_mean, rng)
    params = hawkes_params_for(spec, registry, mark_space)
    traj = thinning_simulate(params, EventArrays.empty(), spec.horizon_days,
                             np.random.default_rng([seed, 1]))
    if len(traj.events) == 0:
        log.warning("synthetic Hawkes spec produced no events")
    return registry, params, traj.events


def arrays_to_events(events: EventArrays, registry: SubstationRegistry, origin,
                     mark_space: MarkSpace) -> list[OutageEvent]:
    """Outage records at minute resolution with representative durations and customer counts."""
    ids = registry.ids
    dur, cust = mark_space.representatives(events.marks)
    out = []
    for i, (t, s) in enumerate(zip(events.times, events.subs)):
        start = origin + timedelta(minutes=int(np.floor(t * 1440)))
        out.append(OutageEvent(f"E{i + 1:07d}", ids[s], start,
                               start + timedelta(minutes=int(dur[i])), int(cust[i]), "synthetic"))
    return out


def gen_hawkes_dataset(spec: HawkesDgp, seed: int, outdir, mark_space: MarkSpace = MarkSpace()) -> dict:
    """Write events.csv, substations.csv and truth.json to ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    registry, params, events = simulate_hawkes_events(spec, seed, mark_space)
    origin = month_start(spec.start_month)
    write_events(arrays_to_events(events, registry, origin, mark_space), outdir / "events.csv")
    write_registry(registry, outdir / "substations.csv")
    truth = dict(kind="hawkes", version=TRUTH_VERSION, seed=seed, spec=asdict(spec),
                 origin=spec.start_month, n_events=int(len(events)),
                 mark_space=mark_space.to_dict(),
                 params=dict(mu=params.mu.tolist(), c=params.c, alpha=params.alpha,
                             beta=params.beta, k_nn=params.k_nn,
                             theta=params.theta.tolist()))
    write_truth(truth, outdir / "truth.json")
    return truth


def _fe(rng, n, scale):
    return rng.normal(0.0, scale, n)


def gen_twopart_panel(spec: PanelDgp, seed: int) -> tuple[pd.DataFrame, dict]:
    """Panel where the treatment is endogenous through the first-stage error.

    Returns the panel (substation_id, month, S_h, F_h, G_h, x1, x2, Y) and a
    truth dictionary.
    """
    rng = np.random.default_rng(seed)
    h = spec.horizon
    U, M = spec.n_units, spec.n_months
    months = month_range(spec.start_month, str(pd.Period(spec.start_month, "M") + (M - 1)))
    unit = np.repeat(np.arange(U), M)
    month_idx = np.tile(np.arange(M), U)
    quarters = pd.PeriodIndex(months, freq="M").asfreq("Q").astype(str)
    q_codes, q_levels = pd.factorize(np.asarray(quarters)[month_idx])
    n = U * M

    x_unit = rng.normal(0, 0.5, (U, 2))
    x = x_unit[unit] + rng.normal(0, 1, (n, 2))
    G = spec.g_mean + spec.g_sd * rng.normal(size=n)
    v = spec.sigma_v * rng.normal(size=n)
    S = (spec.a0 + spec.a1 * G + x @ np.asarray(spec.a_x)
         + _fe(rng, U, spec.fe_scale_s)[unit] + _fe(rng, len(q_levels), spec.fe_scale_s)[q_codes] + v)
    F = 1.5 + 0.3 * x[:, 0] + 0.5 * rng.normal(size=n)
    Z = np.column_stack([S, F, x])

    fe1 = _fe(rng, U, spec.fe_scale)[unit] + _fe(rng, len(q_levels), spec.fe_scale)[q_codes]
    idx1 = Z @ np.asarray(spec.b) + spec.rho_logit * v + fe1
    # intercept chosen so the expected share of zeros hits the target
    b0 = brentq(lambda c: np.mean(expit(c + idx1)) - (1 - spec.zero_fraction), -200, 200)
    D = rng.uniform(size=n) < expit(b0 + idx1)

    fe2 = _fe(rng, U, spec.fe_scale)[unit] + _fe(rng, len(q_levels), spec.fe_scale)[q_codes]
    eta2 = spec.g0 + Z @ np.asarray(spec.g) + spec.rho_glm * v + fe2
    mag = np.exp(eta2 + spec.sigma_y * rng.normal(size=n) - spec.sigma_y ** 2 / 2)
    Y = np.where(D, mag, 0.0)

    df = pd.DataFrame({
        "substation_id": [f"SUB{u + 1:03d}" for u in unit],
        "month": np.asarray(months)[month_idx],
        f"S_{h}": S, f"F_{h}": F, f"G_{h}": G, "x1": x[:, 0], "x2": x[:, 1], "Y": Y,
    })
    truth = dict(kind="panel", version=TRUTH_VERSION, seed=seed, spec=asdict(spec),
                 logit_intercept=float(b0), zero_fraction_realized=float(1 - D.mean()),
                 logit=dict(zip([f"S_{h}", f"F_{h}", "x1", "x2"], map(float, spec.b))),
                 glm=dict(zip([f"S_{h}", f"F_{h}", "x1", "x2"], map(float, spec.g))),
                 first_stage={f"G_{h}": spec.a1})
    return df, truth


def write_truth(truth: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")


_TRUTH_KEYS = {"hawkes": {"kind", "version", "seed", "spec", "params", "n_events", "mark_space"},
               "panel": {"kind", "version", "seed", "spec", "logit", "glm", "first_stage"}}


def load_truth(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        truth = json.load(fh)
    kind = truth.get("kind")
    if kind not in _TRUTH_KEYS:
        raise GridPVError(f"{path}: unknown truth kind {kind!r}")
    missing = _TRUTH_KEYS[kind] - set(truth)
    if missing:
        raise GridPVError(f"{path}: truth file missing keys {sorted(missing)}")
    if truth["version"] != TRUTH_VERSION:
        raise GridPVError(f"{path}: unsupported truth version {truth['version']}")
    return truth
