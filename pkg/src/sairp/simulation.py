"""Sample-path simulation of policies and the evaluation metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .model import (
    ABSORBING,
    Action,
    ModelError,
    Scenario,
    State,
    decompose_action,
    immediate_reward,
    is_feasible,
    next_capacity,
    next_full,
    terminal_reward,
)


class DecisionSource(Protocol):
    def decide(self, t: int, s: State) -> Action: ...


@dataclass(frozen=True)
class DemandPath:
    demands: tuple[int, ...]
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.demands)


@dataclass(frozen=True)
class Trajectory:
    """One simulated path. Row ``i`` describes decision epoch ``t = i + 1``."""

    t: np.ndarray
    full: np.ndarray
    cap: np.ndarray
    s2: np.ndarray  # capacity value, NaN at the absorbing level
    charge: np.ndarray
    replace: np.ndarray
    demand: np.ndarray
    satisfied: np.ndarray
    reward: np.ndarray
    final_state: State
    terminal: float

    @property
    def total_reward(self) -> float:
        return float(self.reward.sum()) + self.terminal

    def __len__(self) -> int:
        return len(self.t)


def sample_demand_paths(sc: Scenario, count: int, seed: int) -> list[DemandPath]:
    """``count`` independent demand paths, reproducible from ``seed``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    return [
        DemandPath(tuple(sc.demand.sample(t, rng) for t in range(1, sc.N)), seed)
        for _ in range(count)
    ]


def mean_demand_path(sc: Scenario) -> DemandPath:
    """Demand equal to the per-epoch mean, rounded half up to a whole number of swaps."""
    return DemandPath(tuple(int(math.floor(sc.demand.mean(t) + 0.5)) for t in range(1, sc.N)))


def simulate_policy(
    sc: Scenario, source: DecisionSource, path: DemandPath, start: State | None = None
) -> Trajectory:
    """Follow ``source`` along ``path`` from ``start`` (default: all full, top capacity)."""
    if len(path) != sc.T:
        raise ValueError(f"demand path has {len(path)} epochs, scenario has {sc.T}")
    s = sc.reference_state() if start is None else start
    sc.check_state(s)
    cols: dict[str, list] = {k: [] for k in
                             ("t", "full", "cap", "s2", "charge", "replace", "demand", "satisfied", "reward")}
    for t in range(1, sc.N):
        d = int(path.demands[t - 1])
        a = Action(0, 0) if s.cap == ABSORBING else source.decide(t, s)
        if not is_feasible(sc, s, a):
            raise ModelError(f"infeasible action {tuple(a)} at epoch {t} in state {tuple(s)}")
        if s.cap == ABSORBING:
            nxt, sat = s, 0
        else:
            _, a_minus = decompose_action(a)
            sat = min(d, s.full - a_minus)
            nxt = State(next_full(s, a, d), next_capacity(sc, s, a))
        cols["t"].append(t)
        cols["full"].append(s.full)
        cols["cap"].append(s.cap)
        cols["s2"].append(float("nan") if s.cap == ABSORBING else sc.grid.value(s.cap))
        cols["charge"].append(a.charge)
        cols["replace"].append(a.replace)
        cols["demand"].append(d)
        cols["satisfied"].append(sat)
        cols["reward"].append(immediate_reward(sc, s, a, nxt, t))
        s = nxt
    arrays = {k: np.array(v, dtype=float if k in ("s2", "reward") else np.int64) for k, v in cols.items()}
    return Trajectory(**arrays, final_state=s, terminal=terminal_reward(sc, s))


def optimality_gap(v_exact: float, v_approx: float) -> float:
    """Absolute relative gap in percent."""
    if v_exact == 0:
        raise ValueError("optimality gap is undefined when the exact value is 0")
    return abs((v_exact - v_approx) / v_exact) * 100.0


def gap_over_iterations(trace: Sequence[float] | np.ndarray, v_exact: float) -> float:
    """Mean per-iteration optimality gap of a trace of reference-state values."""
    vals = np.asarray(getattr(trace, "values", trace), dtype=float)
    if vals.size == 0:
        raise ValueError("trace is empty")
    if v_exact == 0:
        raise ValueError("optimality gap is undefined when the exact value is 0")
    return float(np.mean(np.abs((v_exact - vals) / v_exact)) * 100.0)


def gap_over_scenarios(gaps: Sequence[float]) -> float:
    if len(gaps) == 0:
        raise ValueError("no gaps to average")
    return float(np.mean(gaps))


def action_difference(
    sets_a: Sequence[Sequence[Trajectory]], sets_b: Sequence[Sequence[Trajectory]]
) -> tuple[float, float]:
    """Percentage difference in total ``|a1|`` and total ``a2`` of ``b`` relative to ``a``.

    Each argument holds one trajectory set per scenario. The per-scenario
    percentages are averaged. Scenarios where ``a`` has a zero total are
    skipped with a warning, and if every scenario is skipped the result is NaN.
    """
    if len(sets_a) != len(sets_b):
        raise ValueError("both arguments need one trajectory set per scenario")
    out = []
    for dim, get in (("charge", lambda tr: np.abs(tr.charge).sum()), ("replace", lambda tr: tr.replace.sum())):
        pcts = []
        for i, (ta, tb) in enumerate(zip(sets_a, sets_b)):
            ref = float(sum(get(tr) for tr in ta))
            other = float(sum(get(tr) for tr in tb))
            if ref == 0:
                warnings.warn(f"scenario {i}: no {dim} actions in the reference set; excluded",
                              RuntimeWarning, stacklevel=2)
                continue
            pcts.append(abs(other - ref) / ref * 100.0)
        out.append(float(np.mean(pcts)) if pcts else float("nan"))
    return out[0], out[1]


def demand_met_fraction(trajectories: Sequence[Trajectory]) -> float:
    """Pooled satisfied demand over pooled demand, or 1.0 with no demand at all."""
    if len(trajectories) == 0:
        raise ValueError("no trajectories")
    dem = sum(int(tr.demand.sum()) for tr in trajectories)
    sat = sum(int(tr.satisfied.sum()) for tr in trajectories)
    return 1.0 if dem == 0 else sat / dem


def replacement_stats(sc: Scenario, trajectories: Sequence[Trajectory]) -> dict[str, float]:
    """How often replacements happen and how large they are."""
    reps = np.concatenate([tr.replace for tr in trajectories])
    active = reps[reps > 0]
    return {
        "epochs": int(reps.size),
        "replacement_epoch_fraction": float(active.size / reps.size) if reps.size else 0.0,
        "mean_fraction_replaced_when_replacing": float(active.mean() / sc.M) if active.size else 0.0,
        "total_replaced": int(reps.sum()),
    }
