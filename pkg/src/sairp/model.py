"""Battery swap station MDP: states, actions, dynamics, probabilities and rewards.

A state is ``(full, cap)``.
- ``full`` counts the fully charged batteries.
- ``cap`` indexes the discretised average capacity of the fleet.

Index 0 of the capacity grid is reserved for the absorbing level, meaning
"average capacity fell below the replacement threshold". Indices ``1..`` map
onto the levels ``theta, theta + epsilon, ..., 1``. Keeping the absorbing
level at the bottom of the index range means the natural integer order of
``cap`` is also the order used by the monotone lattice arguments.

An action is ``(charge, replace)``.
- ``charge > 0`` recharges that many depleted batteries.
- ``charge < 0`` discharges that many full batteries to the grid.
- ``replace`` swaps depleted batteries for new ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy import stats

ABSORBING = 0
SNAP_TOL = 1e-9


class ModelError(ValueError):
    """Invalid scenario parameter, state, or action."""


class State(NamedTuple):
    full: int
    cap: int


class Action(NamedTuple):
    charge: int
    replace: int


# ---------------------------------------------------------------------------
# Capacity grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapacityGrid:
    """Discretised average-capacity levels ``theta, theta+epsilon, ..., 1``."""

    theta: float
    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise ModelError(f"theta must lie in (0, 1), got {self.theta}")
        if self.epsilon <= 0.0:
            raise ModelError(f"epsilon must be positive, got {self.epsilon}")
        steps = (1.0 - self.theta) / self.epsilon
        if abs(steps - round(steps)) > 1e-6 or round(steps) < 1:
            raise ModelError(
                f"(1 - theta)/epsilon must be a positive integer, got {steps:.6g}"
            )

    @property
    def n_steps(self) -> int:
        return int(round((1.0 - self.theta) / self.epsilon))

    @property
    def size(self) -> int:
        """Number of indices including the absorbing one."""
        return self.n_steps + 2

    @property
    def top(self) -> int:
        """Index of capacity level 1."""
        return self.n_steps + 1

    def value(self, idx: int) -> float:
        if idx == ABSORBING:
            raise ModelError("the absorbing level has no capacity value")
        if not 1 <= idx <= self.top:
            raise ModelError(f"capacity index {idx} outside 0..{self.top}")
        return round(self.theta + (idx - 1) * self.epsilon, 12)

    def index(self, value: float) -> int:
        k = int(round((value - self.theta) / self.epsilon)) + 1
        if not 1 <= k <= self.top or abs(self.value(k) - value) > 1e-9:
            raise ModelError(f"{value} is not a level of this grid")
        return k

    def levels(self) -> np.ndarray:
        """Capacity values for indices ``1..top``."""
        return np.array([self.value(k) for k in range(1, self.top + 1)])

    def snap(self, g: float) -> int:
        """Grid index for a raw average capacity ``g``.

        Values below ``theta`` map to the absorbing index. Everything else goes
        to the nearest level, and exact ties round up.
        """
        if g < self.theta - SNAP_TOL:
            return ABSORBING
        k = math.floor((g - self.theta) / self.epsilon + 0.5 + SNAP_TOL)
        return min(max(k, 0), self.n_steps) + 1


# ---------------------------------------------------------------------------
# Demand
# ---------------------------------------------------------------------------


def pmf_survival(pmf_values: np.ndarray) -> np.ndarray:
    """Survival ``P(D >= u)`` for ``u = 0..len(pmf_values)-1``.

    Each entry is computed as one minus a running sum of the pmf, so nothing
    is ever summed over an infinite tail.
    """
    out = np.empty(len(pmf_values))
    acc = 0.0
    for u in range(len(pmf_values)):
        out[u] = 1.0 - acc
        acc += float(pmf_values[u])
    return out


@dataclass(frozen=True)
class DemandModel:
    """Per-epoch distribution of swap requests.

    ``mode`` is ``"poisson"`` (one mean per decision epoch) or ``"explicit"``
    (one probability row per decision epoch, supported on ``0..len(row)-1``).
    Epochs are numbered from 1.
    """

    mode: str
    lam: tuple[float, ...] = ()
    table: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.mode == "poisson":
            if not self.lam or any((not math.isfinite(x)) or x < 0 for x in self.lam):
                raise ModelError("poisson demand needs nonnegative finite means")
        elif self.mode == "explicit":
            if not self.table:
                raise ModelError("explicit demand needs at least one pmf row")
            for i, row in enumerate(self.table):
                if any(p < 0 for p in row) or abs(math.fsum(row) - 1.0) > 1e-12:
                    raise ModelError(f"pmf row for epoch {i + 1} must be a distribution")
        else:
            raise ModelError(f"unknown demand mode {self.mode!r}")

    @classmethod
    def poisson(cls, lam: Sequence[float]) -> "DemandModel":
        return cls("poisson", lam=tuple(float(x) for x in lam))

    @classmethod
    def explicit(cls, rows: Sequence[Sequence[float]]) -> "DemandModel":
        return cls("explicit", table=tuple(tuple(float(p) for p in r) for r in rows))

    @property
    def horizon(self) -> int:
        return len(self.lam) if self.mode == "poisson" else len(self.table)

    def _check_epoch(self, t: int) -> None:
        if not 1 <= t <= self.horizon:
            raise ModelError(f"epoch {t} outside 1..{self.horizon}")

    def pmf_row(self, t: int, n: int) -> np.ndarray:
        """``P(D_t = j)`` for ``j = 0..n``."""
        self._check_epoch(t)
        j = np.arange(n + 1)
        if self.mode == "poisson":
            return stats.poisson.pmf(j, self.lam[t - 1])
        row = np.asarray(self.table[t - 1])
        out = np.zeros(n + 1)
        m = min(len(row), n + 1)
        out[:m] = row[:m]
        return out

    def survival_row(self, t: int, n: int) -> np.ndarray:
        """``P(D_t >= u)`` for ``u = 0..n``."""
        return pmf_survival(self.pmf_row(t, n))

    def pmf(self, t: int, j: int) -> float:
        return float(self.pmf_row(t, j)[j]) if j >= 0 else 0.0

    def survival(self, t: int, u: int) -> float:
        if u <= 0:
            return 1.0
        return float(self.survival_row(t, u)[u])

    def mean(self, t: int) -> float:
        self._check_epoch(t)
        if self.mode == "poisson":
            return self.lam[t - 1]
        return float(np.dot(np.arange(len(self.table[t - 1])), self.table[t - 1]))

    def sample(self, t: int, rng: np.random.Generator) -> int:
        """Draw one untruncated demand value for epoch ``t``."""
        self._check_epoch(t)
        if self.mode == "poisson":
            return int(rng.poisson(self.lam[t - 1]))
        row = self.table[t - 1]
        u = rng.random()
        acc = 0.0
        for j, p in enumerate(row):
            acc += p
            if u < acc:
                return j
        return len(row) - 1

    def scaled(self, factor: float) -> "DemandModel":
        """Poisson demand with every mean multiplied by ``factor``."""
        if self.mode != "poisson":
            raise ModelError("only poisson demand can be rescaled")
        return DemandModel.poisson([x * factor for x in self.lam])

    def truncated(self, horizon: int) -> "DemandModel":
        if horizon > self.horizon:
            raise ModelError(f"demand covers {self.horizon} epochs, need {horizon}")
        if self.mode == "poisson":
            return DemandModel.poisson(self.lam[:horizon])
        return DemandModel.explicit(self.table[:horizon])


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A complete problem instance.

    ``N`` is the terminal epoch. Decisions are taken at ``t = 1..N-1``, and
    ``K``, ``J``, ``L`` and the demand model are indexed by those epochs.
    """

    M: int
    N: int
    grid: CapacityGrid
    delta_c: float
    beta: float
    K: tuple[float, ...]
    J: tuple[float, ...]
    L: tuple[float, ...]
    demand: DemandModel
    Phi: int | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "K", tuple(float(x) for x in self.K))
        object.__setattr__(self, "J", tuple(float(x) for x in self.J))
        object.__setattr__(self, "L", tuple(float(x) for x in self.L))
        if self.Phi is None:
            object.__setattr__(self, "Phi", self.M)
        if self.M < 1:
            raise ModelError(f"M must be at least 1, got {self.M}")
        if not 0 < self.Phi <= self.M:
            raise ModelError(f"Phi must satisfy 0 < Phi <= M, got {self.Phi}")
        if self.N < 2:
            raise ModelError(f"N must be at least 2, got {self.N}")
        if self.delta_c <= 0:
            raise ModelError(f"delta_c must be positive, got {self.delta_c}")
        for label, seq in (("K", self.K), ("J", self.J), ("L", self.L)):
            if len(seq) != self.N - 1:
                raise ModelError(f"{label} has {len(seq)} entries, expected N-1={self.N - 1}")
            if any(x < 0 or not math.isfinite(x) for x in seq):
                raise ModelError(f"{label} entries must be finite and nonnegative")
        if self.beta < max(self.J):
            raise ModelError(
                f"beta={self.beta} is below the largest discharge revenue {max(self.J)}"
            )
        if self.demand.horizon < self.N - 1:
            raise ModelError(
                f"demand covers {self.demand.horizon} epochs, need {self.N - 1}"
            )

    @property
    def T(self) -> int:
        """Number of decision epochs."""
        return self.N - 1

    @property
    def theta(self) -> float:
        return self.grid.theta

    @property
    def n_caps(self) -> int:
        return self.grid.size

    @property
    def n_states(self) -> int:
        return (self.M + 1) * self.grid.size

    def states(self, include_absorbing: bool = True) -> Iterator[State]:
        first = 0 if include_absorbing else 1
        for s1 in range(self.M + 1):
            for c in range(first, self.grid.size):
                yield State(s1, c)

    def reference_state(self) -> State:
        """All batteries full at top capacity."""
        return State(self.M, self.grid.top)

    def check_state(self, s: State) -> None:
        if not (0 <= s.full <= self.M and 0 <= s.cap < self.grid.size):
            raise ModelError(f"invalid state {tuple(s)} for M={self.M}")

    def with_fleet(self, M: int, horizon: int | None = None) -> "Scenario":
        """Same prices and costs with ``M`` batteries, demand scaled by ``M/self.M``.

        ``horizon`` optionally shortens the number of decision epochs.
        """
        T = self.T if horizon is None else horizon
        if not 1 <= T <= self.T:
            raise ModelError(f"horizon {T} outside 1..{self.T}")
        phi = M if self.Phi == self.M else min(self.Phi, M)
        return Scenario(
            M=M,
            N=T + 1,
            grid=self.grid,
            delta_c=self.delta_c,
            beta=self.beta,
            K=self.K[:T],
            J=self.J[:T],
            L=self.L[:T],
            demand=self.demand.truncated(T).scaled(M / self.M),
            Phi=phi,
            name=f"{self.name}[M={M}]",
        )

    def scaled_rewards(self, c: float) -> "Scenario":
        """All money amounts multiplied by ``c``."""
        return Scenario(
            M=self.M, N=self.N, grid=self.grid, delta_c=self.delta_c, beta=self.beta * c,
            K=tuple(x * c for x in self.K), J=tuple(x * c for x in self.J),
            L=tuple(x * c for x in self.L), demand=self.demand, Phi=self.Phi,
            name=self.name,
        )


# ---------------------------------------------------------------------------
# Actions and dynamics
# ---------------------------------------------------------------------------


def decompose_action(a: Action) -> tuple[int, int]:
    """Split the signed charge into (recharged count, discharged count)."""
    return max(a.charge, 0), max(-a.charge, 0)


def tie_break_key(a: Action) -> tuple[int, int, int]:
    """Sort key for argmax ties: small ``|a1|``, then small ``a1``, then small ``a2``."""
    return (abs(a.charge), a.charge, a.replace)


def is_feasible(sc: Scenario, s: State, a: Action) -> bool:
    if s.cap == ABSORBING:
        return a == (0, 0)
    a_plus, a_minus = decompose_action(a)
    return (
        0 <= a.replace <= sc.M - s.full
        and a_minus <= min(s.full, sc.Phi)
        and a_plus <= min(sc.M - s.full - a.replace, sc.Phi)
    )


def feasible_actions(sc: Scenario, s: State) -> list[Action]:
    """Feasible actions in state ``s``, ordered by :func:`tie_break_key`."""
    sc.check_state(s)
    if s.cap == ABSORBING:
        return [Action(0, 0)]
    out = []
    for a2 in range(sc.M - s.full + 1):
        lo = max(-s.full, -sc.Phi)
        hi = min(sc.M - s.full - a2, sc.Phi)
        out.extend(Action(a1, a2) for a1 in range(lo, hi + 1))
    out.sort(key=tie_break_key)
    return out


def _check_action(sc: Scenario, s: State, a: Action) -> None:
    sc.check_state(s)
    if not is_feasible(sc, s, a):
        raise ModelError(f"action {tuple(a)} infeasible in state {tuple(s)}")


def next_full(s: State, a: Action, d: int) -> int:
    """Full batteries at the next epoch after serving demand ``d``."""
    a_plus, a_minus = decompose_action(a)
    available = s.full - a_minus
    return s.full + a.replace + a_plus - a_minus - min(d, available)


def raw_next_capacity(sc: Scenario, s: State, a: Action) -> float:
    """Average capacity after the action, before snapping to the grid."""
    s2 = sc.grid.value(s.cap)
    a_plus, a_minus = decompose_action(a)
    cycles = a_plus + a_minus
    return ((s2 - sc.delta_c) * cycles + a.replace + s2 * (sc.M - cycles - a.replace)) / sc.M


def next_capacity(sc: Scenario, s: State, a: Action) -> int:
    """Capacity index at the next epoch. The absorbing level is kept."""
    if s.cap == ABSORBING:
        return ABSORBING
    return sc.grid.snap(raw_next_capacity(sc, s, a))


def transition_support(
    sc: Scenario, s: State, a: Action, t: int
) -> list[tuple[State, float]]:
    """Reachable next states with their probabilities, in ascending ``full`` order."""
    _check_action(sc, s, a)
    if s.cap == ABSORBING:
        return [(s, 1.0)]
    a_plus, a_minus = decompose_action(a)
    n = s.full - a_minus
    base = a.replace + a_plus
    j2 = next_capacity(sc, s, a)
    pmf = sc.demand.pmf_row(t, n)
    surv = pmf_survival(pmf)
    out = [(State(base, j2), float(surv[n]))]
    for m in range(1, n + 1):
        out.append((State(base + m, j2), float(pmf[n - m])))
    return out


# ---------------------------------------------------------------------------
# Rewards
# ---------------------------------------------------------------------------


def swap_revenue(beta: float, theta: float, s2: float) -> float:
    """Revenue per swap at average capacity ``s2``."""
    return beta * (1.0 + s2 - 2.0 * theta) / (1.0 - theta)


def rho(sc: Scenario, cap: int) -> float:
    """Revenue per swap at capacity index ``cap``."""
    if cap == ABSORBING:
        raise ModelError("no swaps are possible at the absorbing level")
    return swap_revenue(sc.beta, sc.theta, sc.grid.value(cap))


def _cost_terms(sc: Scenario, a: Action, t: int) -> float:
    a_plus, a_minus = decompose_action(a)
    i = t - 1
    return -sc.K[i] * a_plus + sc.J[i] * a_minus - sc.L[i] * a.replace


def immediate_reward(sc: Scenario, s: State, a: Action, s_next: State, t: int) -> float:
    """Realised reward of ``a`` in ``s`` given the observed next state."""
    if s.cap == ABSORBING:
        return 0.0
    a_plus, a_minus = decompose_action(a)
    swaps = s.full + a.replace + a_plus - a_minus - s_next.full
    return rho(sc, s.cap) * swaps + _cost_terms(sc, a, t)


def expected_min(pmf: np.ndarray, surv: np.ndarray, n: int) -> float:
    """``E[min(D, n)]`` from the pmf and survival rows."""
    acc = 0.0
    for j in range(n):
        acc += j * pmf[j]
    return acc + n * surv[n]


def expected_immediate_reward(sc: Scenario, s: State, a: Action, t: int) -> float:
    _check_action(sc, s, a)
    if s.cap == ABSORBING:
        return 0.0
    _, a_minus = decompose_action(a)
    n = s.full - a_minus
    pmf = sc.demand.pmf_row(t, n)
    surv = pmf_survival(pmf)
    return rho(sc, s.cap) * expected_min(pmf, surv, n) + _cost_terms(sc, a, t)


def terminal_reward(sc: Scenario, s: State) -> float:
    if s.cap == ABSORBING:
        return 0.0
    return rho(sc, s.cap) * s.full


# ---------------------------------------------------------------------------
# Structural results
# ---------------------------------------------------------------------------


def replacement_cap(sc: Scenario, cap: int) -> float:
    """Largest replacement count that cannot move the snapped capacity.

    Returns ``math.inf`` at capacity 1, where there is no limit.
    """
    s2 = sc.grid.value(cap)
    if cap == sc.grid.top:
        return math.inf
    return math.floor(sc.M * sc.grid.epsilon / (2.0 * (1.0 - s2)) + SNAP_TOL)


def absorbing_threshold_xi(sc: Scenario, s: State, a: Action) -> int:
    """Replacement count below which the action leads to the absorbing level."""
    s2 = sc.grid.value(s.cap)
    a_plus, a_minus = decompose_action(a)
    num = sc.delta_c * (a_plus + a_minus) - sc.M * (s2 - sc.theta)
    if s.cap == sc.grid.top:
        return sc.M + 1 if num > SNAP_TOL else 0
    return math.floor(num / (1.0 - s2) + SNAP_TOL)


@dataclass(frozen=True)
class SubadditivityWitness:
    """Grid level ``k`` where the tail-probability sum is not subadditive."""

    full: int
    charge: int
    cap_hi: int
    cap_lo: int
    replace_hi: int
    replace_lo: int
    k: int
    j_a: int
    j_b: int
    j_c: int
    j_d: int


def find_subadditivity_violation(sc: Scenario) -> SubadditivityWitness | None:
    """Search for a level ``k`` with ``q(k|A) + q(k|D) > q(k|B) + q(k|C)``.

    The pairs are built with ``cap_hi >= cap_lo`` and ``replace_hi >= replace_lo``:
    - ``A = (cap_hi, replace_hi)``
    - ``B = (cap_lo, replace_hi)``
    - ``C = (cap_hi, replace_lo)``
    - ``D = (cap_lo, replace_lo)``

    ``q(k|.)`` is the indicator that the next capacity index is at least
    ``k``. The first witness found is returned, or ``None`` if there is none.
    """
    for s1 in range(sc.M + 1):
        for charge in range(max(-s1, -sc.Phi), min(sc.M - s1, sc.Phi) + 1):
            for c_lo in range(1, sc.grid.size):
                for c_hi in range(c_lo, sc.grid.size):
                    for r_lo in range(sc.M - s1 + 1):
                        for r_hi in range(r_lo, sc.M - s1 + 1):
                            a_hi, a_lo = Action(charge, r_hi), Action(charge, r_lo)
                            if not (is_feasible(sc, State(s1, c_lo), a_hi)
                                    and is_feasible(sc, State(s1, c_lo), a_lo)):
                                continue
                            j_a = next_capacity(sc, State(s1, c_hi), a_hi)
                            j_b = next_capacity(sc, State(s1, c_lo), a_hi)
                            j_c = next_capacity(sc, State(s1, c_hi), a_lo)
                            j_d = next_capacity(sc, State(s1, c_lo), a_lo)
                            for k in range(max(j_b, j_c) + 1, j_a + 1):
                                lhs = int(j_a >= k) + int(j_d >= k)
                                rhs = int(j_b >= k) + int(j_c >= k)
                                if lhs > rhs:
                                    return SubadditivityWitness(
                                        s1, charge, c_hi, c_lo, r_hi, r_lo, k,
                                        j_a, j_b, j_c, j_d,
                                    )
    return None
