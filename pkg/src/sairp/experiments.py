"""Scenario construction: data files, demand scaling, Latin hypercube designs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .model import CapacityGrid, DemandModel, Scenario

BATTERY_KWH = 0.4
REFERENCE_FLEET = 7


class DataError(ValueError):
    """Malformed or invalid input data."""


@dataclass(frozen=True)
class FactorRange:
    name: str
    low: float
    high: float

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise ValueError(f"factor {self.name}: low must be below high")

    def contains(self, x: float) -> bool:
        return self.low <= x <= self.high


FACTOR_RANGES = (
    FactorRange("beta", 1.0, 3.0),
    FactorRange("L", 2.0, 100.0),
    FactorRange("deltaC", 0.005, 0.02),
)


@dataclass(frozen=True)
class ScenarioPoint:
    id: int
    beta: float
    L: float
    deltaC: float


_TABLE4 = (
    (1.03, 45, 0.009), (1.08, 82, 0.011), (1.13, 61, 0.005), (1.20, 69, 0.009),
    (1.23, 89, 0.008), (1.26, 47, 0.010), (1.32, 98, 0.019), (1.39, 94, 0.011),
    (1.41, 87, 0.014), (1.48, 36, 0.006), (1.53, 68, 0.016), (1.56, 28, 0.018),
    (1.60, 57, 0.010), (1.68, 31, 0.017), (1.71, 62, 0.006), (1.76, 44, 0.017),
    (1.83, 55, 0.016), (1.88, 51, 0.019), (1.94, 66, 0.012), (1.95, 73, 0.019),
    (2.00, 83, 0.012), (2.07, 20, 0.013), (2.15, 90, 0.013), (2.16, 41, 0.007),
    (2.22, 79, 0.015), (2.27, 8, 0.007), (2.32, 25, 0.017), (2.37, 74, 0.014),
    (2.40, 7, 0.018), (2.50, 14, 0.008), (2.51, 24, 0.015), (2.56, 34, 0.009),
    (2.64, 39, 0.010), (2.68, 54, 0.016), (2.71, 3, 0.007), (2.77, 16, 0.012),
    (2.83, 21, 0.013), (2.90, 77, 0.015), (2.91, 96, 0.020), (2.96, 12, 0.005),
)


def builtin_lhs40() -> list[ScenarioPoint]:
    """The 40 published design points ``(beta, L, deltaC)``."""
    return [ScenarioPoint(i + 1, b, float(l), d) for i, (b, l, d) in enumerate(_TABLE4)]


def lhs_design(ranges: Sequence[FactorRange], count: int, seed: int) -> list[ScenarioPoint]:
    """Plain Latin hypercube design over ``beta``, ``L`` and ``deltaC``.

    Each factor's range is split into ``count`` equal strata. Every stratum
    is used exactly once, the value within a stratum is uniform, and the
    pairing across factors is a random permutation.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    by_name = {r.name: r for r in ranges}
    missing = {"beta", "L", "deltaC"} - by_name.keys()
    if missing:
        raise ValueError(f"missing factor ranges: {sorted(missing)}")
    order = ("beta", "L", "deltaC")
    unit = qmc.LatinHypercube(d=3, scramble=True, seed=np.random.default_rng(seed)).random(count)
    lo = np.array([by_name[n].low for n in order])
    hi = np.array([by_name[n].high for n in order])
    pts = qmc.scale(unit, lo, hi)
    return [ScenarioPoint(i + 1, float(b), float(l), float(d)) for i, (b, l, d) in enumerate(pts)]


@dataclass(frozen=True)
class BaseData:
    """Everything besides the design point that defines a scenario."""

    prices: tuple[float, ...] | None  # $/kWh, hourly
    demand_profile: tuple[float, ...] | None  # mean swaps per hour at REFERENCE_FLEET batteries
    battery_kwh: float = BATTERY_KWH
    theta: float = 0.8
    epsilon: float = 0.01
    M: int = 3
    Phi: int | None = None
    horizon: int = 48


def load_series_csv(path: str | Path, kind: str) -> tuple[float, ...]:
    """Read an hourly series from ``hour,usd_per_kwh`` or ``hour,lambda``.

    ``kind`` is ``"price"`` or ``"demand"``. Hours must run 0, 1, 2, ...
    """
    columns = {"price": "usd_per_kwh", "demand": "lambda"}
    if kind not in columns:
        raise ValueError(f"kind must be one of {sorted(columns)}")
    want = ["hour", columns[kind]]
    values: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != want:
            raise DataError(f"{path}: line 1: expected header {','.join(want)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                hour = int(row[0])
                val = float(row[1])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: cannot parse {row}") from None
            if hour != len(values):
                raise DataError(f"{path}: line {lineno}: expected hour {len(values)}, got {hour}")
            if not math.isfinite(val) or val < 0:
                raise DataError(f"{path}: line {lineno}: value must be finite and nonnegative, got {val}")
            values.append(val)
    if not values:
        raise DataError(f"{path}: no data rows")
    return tuple(values)


def load_points_csv(path: str | Path) -> list[ScenarioPoint]:
    """Read design points from ``id,beta,L,deltaC``."""
    want = ["id", "beta", "L", "deltaC"]
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != want:
            raise DataError(f"{path}: line 1: expected header {','.join(want)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                pid, beta, L, dc = int(row[0]), float(row[1]), float(row[2]), float(row[3])
            except (ValueError, IndexError):
                raise DataError(f"{path}: line {lineno}: cannot parse {row}") from None
            if beta <= 0 or L < 0 or dc <= 0:
                raise DataError(f"{path}: line {lineno}: beta and deltaC must be positive, L nonnegative")
            out.append(ScenarioPoint(pid, beta, L, dc))
    return out


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("sairp") / "data" / name))


def load_base_data(**overrides) -> BaseData:
    """Base data from the bundled synthetic price and demand files."""
    base = BaseData(
        prices=load_series_csv(bundled_path("prices_december_synthetic.csv"), "price"),
        demand_profile=load_series_csv(bundled_path("demand_weekly_template.csv"), "demand"),
    )
    return BaseData(**{**base.__dict__, **overrides})


def _tile(series: Sequence[float], n: int) -> list[float]:
    reps = -(-n // len(series))
    return (list(series) * reps)[:n]


def scenario_from_point(
    pt: ScenarioPoint, base: BaseData, target_M: int | None = None, horizon: int | None = None
) -> Scenario:
    """Build the scenario for a design point.

    - Recharge cost is the hourly price times the battery energy.
    - Discharge revenue equals the recharge cost.
    - Replacement cost is constant.
    - Mean demand is the reference profile scaled by ``M / 7``.
    - ``horizon`` is the number of decision epochs. Both series are tiled
      when they are shorter than the horizon.
    """
    missing = [f for f in ("prices", "demand_profile") if getattr(base, f) is None]
    if missing:
        raise DataError(f"base data is missing: {', '.join(missing)}")
    M = base.M if target_M is None else target_M
    T = base.horizon if horizon is None else horizon
    K = [p * base.battery_kwh for p in _tile(base.prices, T)]
    lam = [x * M / REFERENCE_FLEET for x in _tile(base.demand_profile, T)]
    return Scenario(
        M=M,
        N=T + 1,
        grid=CapacityGrid(base.theta, base.epsilon),
        delta_c=pt.deltaC,
        beta=pt.beta,
        K=K,
        J=list(K),
        L=[pt.L] * T,
        demand=DemandModel.poisson(lam),
        Phi=base.Phi,
        name=f"scenario-{pt.id}",
    )


def builtin_scenario(
    sid: int, M: int = 3, horizon: int = 48, epsilon: float = 0.01, theta: float = 0.8,
    base: BaseData | None = None,
) -> Scenario:
    """Scenario ``sid`` (1..40) of the published design, built on the bundled data."""
    points = builtin_lhs40()
    if not 1 <= sid <= len(points):
        raise ValueError(f"builtin scenario id must be in 1..{len(points)}, got {sid}")
    if base is None:
        base = load_base_data(epsilon=epsilon, theta=theta)
    return scenario_from_point(points[sid - 1], base, M, horizon)
