"""Exact finite-horizon solvers: backward induction and its monotone variant."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import get_backend
from .model import ABSORBING, Action, ModelError, Scenario, State, is_feasible
from .tables import ModelTables, build_tables

DEFAULT_MEMORY_BUDGET = 100_000_000


class CapacityError(RuntimeError):
    """The requested solve exceeds the configured memory budget."""


@dataclass(frozen=True)
class SolveOptions:
    """Exact-solve configuration.

    ``probability_mode`` selects how transition probabilities are obtained.
    - ``"cached"`` precomputes every ``p(j | s, a)`` before the sweep, which
      uses a lot of memory.
    - ``"on-demand"`` reads them from the per-epoch pmf and survival rows as
      needed.

    Both modes sum in the same order and return identical tables.

    ``replacement_cap_mode="theorem-cap"`` bounds the replacement count by
    :func:`sairp.model.replacement_cap`.

    ``tie_break`` currently only supports the documented rule: smaller
    ``|a1|``, then smaller ``a1``, then smaller ``a2``.
    """

    probability_mode: str = "on-demand"
    replacement_cap_mode: str = "none"
    tie_break: str = "abs-charge,charge,replace"
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    backend: str | None = None

    def __post_init__(self) -> None:
        if self.probability_mode not in ("cached", "on-demand"):
            raise ValueError(f"unknown probability_mode {self.probability_mode!r}")
        if self.replacement_cap_mode not in ("none", "theorem-cap"):
            raise ValueError(f"unknown replacement_cap_mode {self.replacement_cap_mode!r}")
        if self.tie_break != "abs-charge,charge,replace":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")


class ValueTable:
    """Values ``V_t(s)`` for ``t = 1..N``, stored as an array ``(N, M+1, C)``."""

    def __init__(self, sc: Scenario, values: np.ndarray):
        self.scenario = sc
        self.values = values

    def __call__(self, t: int, s: State) -> float:
        return float(self.values[t - 1, s.full, s.cap])

    def epoch(self, t: int) -> np.ndarray:
        return self.values[t - 1]

    def reference_value(self) -> float:
        """``V_1`` at all batteries full with top capacity."""
        return self(1, self.scenario.reference_state())


class Policy:
    """Decision rules for ``t = 1..N-1`` as action indices into ``tables``.

    The absorbing column always holds the null action. An index of ``-1``
    marks a missing decision.
    """

    def __init__(self, sc: Scenario, tables: ModelTables, index: np.ndarray):
        self.scenario = sc
        self.tables = tables
        self.index = index

    def decide(self, t: int, s: State) -> Action:
        ai = int(self.index[t - 1, s.full, s.cap])
        if ai < 0:
            raise ModelError(f"policy has no decision for epoch {t}, state {tuple(s)}")
        return self.tables.action_of(ai)

    @classmethod
    def from_rule(cls, sc: Scenario, rule: Callable[[int, State], Action | None]) -> "Policy":
        """Build a policy by asking ``rule`` for every epoch and state.

        ``rule`` may return ``None`` to leave a decision missing.
        """
        tb = build_tables(sc)
        idx = np.full((sc.T, sc.M + 1, tb.C), -1, dtype=np.int64)
        for t in range(1, sc.N):
            for s in sc.states():
                a = Action(0, 0) if s.cap == ABSORBING else rule(t, s)
                if a is None:
                    continue
                if not is_feasible(sc, s, a):
                    raise ModelError(f"rule gave infeasible action {tuple(a)} at t={t}, {tuple(s)}")
                idx[t - 1, s.full, s.cap] = tb.action_index(a)
        return cls(sc, tb, idx)


def _check_budget(sc: Scenario, tb: ModelTables, opts: SolveOptions) -> None:
    entries = sc.N * tb.S + sc.T * tb.S
    if opts.probability_mode == "cached":
        entries += sc.T * tb.S * tb.A * (tb.M + 1)
    if entries > opts.memory_budget:
        raise CapacityError(
            f"solve needs about {entries:.3g} table entries, above the budget of "
            f"{opts.memory_budget:.3g} (M={sc.M}, N={sc.N}, capacity levels={tb.C - 1})"
        )


def transition_cache(tb: ModelTables) -> np.ndarray:
    """Dense ``p(j | s, a)`` for every epoch, shape ``(T, S, A, M+1)``.

    Entry ``k`` is the probability of ending with ``a2 + a1+ + k`` full
    batteries. Infeasible pairs are left at zero.
    """
    M, C = tb.M, tb.C
    cache = np.zeros((tb.T, tb.S, tb.A, M + 1))
    for s1 in range(M + 1):
        for ai in range(tb.A):
            a1, a2 = int(tb.act_a1[ai]), int(tb.act_a2[ai])
            ap, am = max(a1, 0), max(-a1, 0)
            if a2 > M - s1 or am > min(s1, tb.Phi) or ap > min(M - s1 - a2, tb.Phi):
                continue
            n = s1 - am
            rows = slice(s1 * C + 1, (s1 + 1) * C)
            cache[:, rows, ai, 0] = tb.surv[:, n][:, None]
            for k in range(1, n + 1):
                cache[:, rows, ai, k] = tb.pmf[:, n - k][:, None]
    return cache


def _solve(sc: Scenario, opts: SolveOptions, monotone: bool) -> tuple[ValueTable, Policy]:
    tb = build_tables(sc)
    _check_budget(sc, tb, opts)
    kern = get_backend(opts.backend)
    use_cache = opts.probability_mode == "cached"
    cache = transition_cache(tb) if use_cache else None
    dummy = np.zeros((1, 1, 1))
    V = np.empty((sc.N, tb.S))
    pol = np.empty((sc.T, tb.S), dtype=np.int64)
    V[sc.N - 1] = tb.terminal
    use_cap = int(opts.replacement_cap_mode == "theorem-cap")
    for i in range(sc.T - 1, -1, -1):
        kern.bellman_epoch(
            i, V[i + 1], V[i], pol[i], tb.M, tb.Phi, tb.C, tb.rho, tb.capnext,
            tb.pmf, tb.surv, tb.emin, float(tb.K[i]), float(tb.J[i]), float(tb.L[i]),
            tb.act_a1, tb.act_a2, tb.a2cap, use_cap, int(monotone),
            cache[i] if use_cache else dummy, int(use_cache),
        )
    shape = (sc.M + 1, tb.C)
    return (
        ValueTable(sc, V.reshape((sc.N,) + shape)),
        Policy(sc, tb, pol.reshape((sc.T,) + shape)),
    )


def backward_induction(sc: Scenario, opts: SolveOptions | None = None) -> tuple[ValueTable, Policy]:
    """Optimal values and an optimal policy by the Bellman recursion."""
    return _solve(sc, opts or SolveOptions(), monotone=False)


def monotone_backward_induction(
    sc: Scenario, opts: SolveOptions | None = None
) -> tuple[ValueTable, Policy]:
    """Backward induction with a non-increasing replacement rule in capacity.

    Within each epoch, and for each full count, capacities are swept upward.
    The replacement search at each capacity is limited to the count chosen at
    the previous, lower capacity. The result equals capped backward induction
    whenever the optimal capped rule is itself non-increasing in capacity,
    which holds on the builtin scenarios. With cheap replacement it can fail,
    because the cap grows with capacity. Without the cap it is a heuristic.
    """
    return _solve(sc, opts or SolveOptions(), monotone=True)


def policy_expected_value(sc: Scenario, pol: Policy, backend: str | None = None) -> ValueTable:
    """Expected total reward of a fixed policy, computed by backward recursion."""
    tb = build_tables(sc)
    idx = pol.index
    if idx.shape != (sc.T, sc.M + 1, tb.C):
        raise ModelError("policy shape does not match the scenario")
    missing = np.argwhere(idx[:, :, 1:] < 0)
    if len(missing):
        t, s1, c = missing[0]
        raise ModelError(f"policy has no decision for epoch {t + 1}, state {(int(s1), int(c) + 1)}")
    if pol.tables.A != tb.A or not np.array_equal(pol.tables.act_a1, tb.act_a1):
        raise ModelError("policy was built for a different action table")
    kern = get_backend(backend)
    V = np.empty((sc.N, tb.S))
    V[sc.N - 1] = tb.terminal
    flat = idx.reshape(sc.T, tb.S)
    for i in range(sc.T - 1, -1, -1):
        kern.policy_epoch(
            i, V[i + 1], V[i], np.ascontiguousarray(flat[i]), tb.M, tb.C, tb.rho,
            tb.capnext, tb.pmf, tb.surv, tb.emin, float(tb.K[i]), float(tb.J[i]),
            float(tb.L[i]), tb.act_a1, tb.act_a2,
        )
    return ValueTable(sc, V.reshape(sc.N, sc.M + 1, tb.C))


def is_lattice_monotone(table: np.ndarray, slack: float = 1e-12) -> bool:
    """Whether a ``(M+1, C)`` table is nondecreasing in both coordinates.

    The absorbing column is ignored. Checking adjacent pairs is enough,
    because the componentwise order is generated by unit steps.
    """
    body = table[:, 1:]
    return bool(np.all(np.diff(body, axis=0) >= -slack) and np.all(np.diff(body, axis=1) >= -slack))
