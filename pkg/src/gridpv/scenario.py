"""Counterfactual installation arithmetic under projected outage durations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from gridpv import GridPVError

BASELINE_RATE = 0.00039      # annual new-installation rate, 2014-2023 mean
HOUSEHOLDS = 377_726
AME_PER_HOUR = -0.00012      # change in annual rate per extra hour of annual SAIDI
BASELINE_SAIDI = 202.0       # minutes per year, 2014-2023 mean
YEARS = 16                   # 2024 -> 2040 as yearly steps


@dataclass
class ScenarioInput:
    saidi_trajectory: Sequence[float]
    baseline_rate: float = BASELINE_RATE
    households: int = HOUSEHOLDS
    years: int = YEARS
    ame_per_hour: float = AME_PER_HOUR
    baseline_saidi: float = BASELINE_SAIDI
    labels: Sequence = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.baseline_rate <= 1:
            raise GridPVError("baseline_rate must lie in [0, 1]")
        if self.households < 1:
            raise GridPVError("households must be >= 1")
        if self.years < 1:
            raise GridPVError("years must be >= 1")
        if len(self.saidi_trajectory) < self.years:
            raise GridPVError(f"trajectory has {len(self.saidi_trajectory)} years, need {self.years}")


def cumulative_installs(rate: float, households: int, years: int) -> float:
    """Expected installations at a constant annual rate."""
    if not 0 <= rate <= 1:
        raise GridPVError("rate must lie in [0, 1]")
    return rate * households * years


def adjusted_rates(inp: ScenarioInput) -> np.ndarray:
    saidi = np.asarray(inp.saidi_trajectory[:inp.years], dtype=float)
    rate = inp.baseline_rate + inp.ame_per_hour * (saidi - inp.baseline_saidi) / 60.0
    return np.maximum(rate, 0.0)


def outage_adjusted_installs(inp: ScenarioInput) -> tuple[float, float]:
    """(cumulative installs under the trajectory, reduction vs the constant-reliability path)."""
    count = float(np.sum(adjusted_rates(inp) * inp.households))
    counterfactual = cumulative_installs(inp.baseline_rate, inp.households, inp.years)
    reduction = 1 - count / counterfactual if counterfactual > 0 else 0.0
    return count, reduction


def scenario_table(inp: ScenarioInput) -> pd.DataFrame:
    rates = adjusted_rates(inp)
    labels = list(inp.labels[:inp.years]) or list(range(1, inp.years + 1))
    installs = rates * inp.households
    cf = inp.baseline_rate * inp.households
    return pd.DataFrame({
        "year": labels,
        "saidi_minutes": np.asarray(inp.saidi_trajectory[:inp.years], dtype=float),
        "adjusted_rate": rates,
        "installs": installs,
        "cumulative_installs": np.cumsum(installs),
        "counterfactual_cumulative": cf * np.arange(1, inp.years + 1),
    })


def linear_ramp(start: float, end: float, years: int) -> np.ndarray:
    """Yearly values for the ``years`` steps after a base year at ``start``,
    rising linearly to ``end`` in the last step (the base year is excluded)."""
    if years < 1:
        raise GridPVError("years must be >= 1")
    return start + (end - start) * np.arange(1, years + 1) / years
