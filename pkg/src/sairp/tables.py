"""Dense array form of a :class:`~sairp.model.Scenario`, consumed by the kernels.

States are flattened as ``s = full * C + cap``, where ``C`` is the number of
capacity indices including the absorbing one. Decision epochs are 0-based
here: array row ``i`` holds epoch ``t = i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ABSORBING,
    Action,
    Scenario,
    State,
    expected_min,
    pmf_survival,
    replacement_cap,
    swap_revenue,
    tie_break_key,
)


@dataclass(frozen=True)
class ModelTables:
    M: int
    Phi: int
    C: int
    T: int
    rho: np.ndarray  # (C,)  0 at the absorbing index
    capnext: np.ndarray  # (C, M+1, M+1) next cap index by [cap, cycles, replace]
    pmf: np.ndarray  # (T, M+1)
    surv: np.ndarray  # (T, M+1)
    emin: np.ndarray  # (T, M+1)  E[min(D_t, n)]
    cdf: np.ndarray  # (T, M)    P(D_t <= k), used to sample min(D_t, M)
    K: np.ndarray
    J: np.ndarray
    L: np.ndarray
    act_a1: np.ndarray  # (A,) all (a1, a2) pairs in tie-break order
    act_a2: np.ndarray
    a2cap: np.ndarray  # (C,) replacement cap per capacity index
    terminal: np.ndarray  # (S,)

    @property
    def S(self) -> int:
        return (self.M + 1) * self.C

    @property
    def A(self) -> int:
        return len(self.act_a1)

    def state_index(self, s: State) -> int:
        return s.full * self.C + s.cap

    def state_of(self, idx: int) -> State:
        return State(int(idx) // self.C, int(idx) % self.C)

    def action_of(self, ai: int) -> Action:
        return Action(int(self.act_a1[ai]), int(self.act_a2[ai]))

    def action_index(self, a: Action) -> int:
        hits = np.nonzero((self.act_a1 == a.charge) & (self.act_a2 == a.replace))[0]
        if len(hits) != 1:
            raise KeyError(f"action {tuple(a)} not in the action table")
        return int(hits[0])


def build_tables(sc: Scenario) -> ModelTables:
    M, C, T = sc.M, sc.grid.size, sc.T
    grid = sc.grid

    rho = np.zeros(C)
    for c in range(1, C):
        rho[c] = swap_revenue(sc.beta, sc.theta, grid.value(c))

    # Next capacity depends on (cap, cycles, replace) only; unreachable
    # combinations (cycles + replace > M) are filled harmlessly.
    capnext = np.zeros((C, M + 1, M + 1), dtype=np.int64)
    for c in range(1, C):
        s2 = grid.value(c)
        for cyc in range(M + 1):
            for a2 in range(M + 1 - cyc):
                g = ((s2 - sc.delta_c) * cyc + a2 + s2 * (M - cyc - a2)) / M
                capnext[c, cyc, a2] = grid.snap(g)

    pmf = np.empty((T, M + 1))
    surv = np.empty((T, M + 1))
    emin = np.empty((T, M + 1))
    for i in range(T):
        pmf[i] = sc.demand.pmf_row(i + 1, M)
        surv[i] = pmf_survival(pmf[i])
        for n in range(M + 1):
            emin[i, n] = expected_min(pmf[i], surv[i], n)
    cdf = 1.0 - surv[:, 1:]

    pairs = sorted(
        (Action(a1, a2) for a2 in range(M + 1) for a1 in range(-sc.Phi, sc.Phi + 1)
         if max(a1, 0) + a2 <= M),
        key=tie_break_key,
    )
    act_a1 = np.array([p.charge for p in pairs], dtype=np.int64)
    act_a2 = np.array([p.replace for p in pairs], dtype=np.int64)

    a2cap = np.full(C, M, dtype=np.int64)
    for c in range(1, C):
        cap = replacement_cap(sc, c)
        a2cap[c] = M if cap == float("inf") else min(int(cap), M)
    a2cap[ABSORBING] = 0

    terminal = np.zeros((M + 1) * C)
    for s1 in range(M + 1):
        for c in range(1, C):
            terminal[s1 * C + c] = rho[c] * s1

    return ModelTables(
        M=M, Phi=int(sc.Phi), C=C, T=T, rho=rho, capnext=capnext, pmf=pmf,
        surv=surv, emin=emin, cdf=np.ascontiguousarray(cdf),
        K=np.array(sc.K), J=np.array(sc.J), L=np.array(sc.L),
        act_a1=act_a1, act_a2=act_a2, a2cap=a2cap, terminal=terminal,
    )
