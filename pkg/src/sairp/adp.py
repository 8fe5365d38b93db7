"""Approximate dynamic programming: AVI and monotone ADP variants.

Every variant runs forward passes over sampled demand. Each pass starts from
a random non-absorbing state and, at every epoch:
1. picks the action maximising the expected immediate reward plus the current
   approximation at the sampled next state;
2. smooths that observation into the visited entry.

The monotone variants (MADP, MADP-M, MADP-RB) also push the new value onto
every comparable state through a monotone projection. The ``-RB`` variants
start from a linear fit to exact solutions of smaller instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exact import Policy, ValueTable, backward_induction
from .kernels import get_backend
from .model import Scenario, State
from .stepsize import StepsizeSpec
from .tables import ModelTables, build_tables

VARIANTS = ("avi", "avi-rb", "madp", "madp-m", "madp-rb")
FEATURES = ("intercept", "M", "s1", "s2", "t")


@dataclass(frozen=True)
class AdpConfig:
    variant: str = "madp-rb"
    tau: int = 1000
    stepsize: StepsizeSpec = field(default_factory=StepsizeSpec)
    seed: int = 0
    m_bar: int = 2
    t_bar: int | None = None
    max_iterations: int = 2
    k: float = 0.5
    batch: int = 500
    backend: str | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.tau < 1:
            raise ValueError("tau must be at least 1")
        if self.m_bar < 1 or self.max_iterations < 0:
            raise ValueError("m_bar must be positive and max_iterations nonnegative")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")

    @property
    def monotone(self) -> bool:
        return self.variant.startswith("madp")

    @property
    def regression(self) -> bool:
        return self.variant.endswith("-rb")

    def validate_for(self, sc: Scenario) -> None:
        if self.regression:
            if not self.m_bar < sc.M:
                raise ValueError(f"m_bar={self.m_bar} must be below M={sc.M}")
            if self.t_bar is not None and not 1 <= self.t_bar <= sc.T:
                raise ValueError(f"t_bar={self.t_bar} must lie in 1..{sc.T}")


class ValueApprox:
    """Approximate values ``(N, M+1, C)`` after ``n`` iterations."""

    def __init__(self, sc: Scenario, values: np.ndarray, n: int = 0):
        self.scenario = sc
        self.values = values
        self.n = n

    def __call__(self, t: int, s: State) -> float:
        return float(self.values[t - 1, s.full, s.cap])

    def reference_value(self) -> float:
        return self(1, self.scenario.reference_state())


@dataclass
class IterationTrace:
    """Per-iteration approximation at the reference state and the stepsize applied."""

    values: np.ndarray
    alphas: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RegressionCoeffs:
    h: tuple[float, float, float, float, float]

    def predict(self, M, s1, s2, t):
        h0, h1, h2, h3, h4 = self.h
        return h0 + h1 * M + h2 * s1 + h3 * s2 + h4 * t


class RegressionError(ValueError):
    pass


def fit_value_regression(samples: Sequence[Sequence[float]] | np.ndarray) -> RegressionCoeffs:
    """Least-squares fit of ``V ~ h0 + h1*M + h2*s1 + h3*s2 + h4*t``.

    ``samples`` holds rows ``(M, s1, s2, t, V)``. A design matrix without full
    column rank raises :class:`RegressionError` naming the first feature that
    adds no new direction.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 5:
        raise RegressionError("samples must be rows of (M, s1, s2, t, V)")
    X = np.column_stack([np.ones(len(data)), data[:, :4]])
    y = data[:, 4]
    for j in range(1, 6):
        if np.linalg.matrix_rank(X[:, :j]) < j:
            raise RegressionError(
                f"design matrix is rank deficient: feature {FEATURES[j - 1]!r} is constant "
                "or a linear combination of the preceding features"
            )
    h, *_ = np.linalg.lstsq(X, y, rcond=None)
    return RegressionCoeffs(tuple(float(x) for x in h))


def monotone_projection(table: np.ndarray, visited: State, z: float) -> np.ndarray:
    """Set ``visited`` to ``z`` and restore the componentwise order around it.

    States above ``visited`` with a smaller value are raised to ``z``. States
    below it with a larger value are lowered to ``z``. Incomparable states and
    the absorbing column are left alone. Returns a new ``(M+1, C)`` array.
    """
    out = np.array(table, dtype=float, copy=True)
    s1, c = visited
    if c == 0:
        raise ValueError("cannot project onto the absorbing level")
    up = out[s1:, c:]
    np.maximum(up, z, out=up)
    down = out[: s1 + 1, 1 : c + 1]
    np.minimum(down, z, out=down)
    out[s1, c] = z
    return out


def monotone_sweep(table: np.ndarray) -> np.ndarray:
    """Smallest table that dominates ``table`` and is monotone, ignoring the absorbing column."""
    out = np.array(table, dtype=float, copy=True)
    body = out[:, 1:]
    np.maximum.accumulate(body, axis=0, out=body)
    np.maximum.accumulate(body, axis=1, out=body)
    return out


Solver = Callable[[Scenario], tuple[ValueTable, Policy]]


def regression_samples(sc: Scenario, cfg: AdpConfig, solver: Solver = backward_induction) -> np.ndarray:
    """Exact values of the smaller instances as rows ``(M, s1, s2, t, V)``."""
    t_bar = cfg.t_bar or sc.T
    rows = []
    for m in range(cfg.m_bar, cfg.m_bar + cfg.max_iterations + 1):
        small = sc.with_fleet(m, t_bar)
        V, _ = solver(small)
        for t in range(1, t_bar + 1):
            for s in small.states(include_absorbing=False):
                rows.append((m, s.full, small.grid.value(s.cap), t, V(t, s)))
    return np.array(rows)


def regression_init(sc: Scenario, cfg: AdpConfig, solver: Solver = backward_induction) -> ValueApprox:
    """Initial approximation from a linear fit to exact small-instance values.

    The instances with ``m_bar .. m_bar + max_iterations`` batteries are
    solved exactly, with demand scaled in proportion to the fleet. The fit is
    evaluated at the target fleet for every epoch before the terminal one,
    and each epoch table is then swept into monotone order.
    """
    cfg.validate_for(sc)
    coeffs = fit_value_regression(regression_samples(sc, cfg, solver))
    tb = build_tables(sc)
    values = _terminal_layer(sc, tb)
    s1 = np.arange(sc.M + 1)[:, None]
    s2 = np.concatenate([[0.0], sc.grid.levels()])[None, :]
    for t in range(1, sc.N):
        layer = coeffs.predict(sc.M, s1, s2, t) * np.ones((sc.M + 1, tb.C))
        layer[:, 0] = 0.0
        values[t - 1] = monotone_sweep(layer)
    approx = ValueApprox(sc, values)
    approx.coeffs = coeffs  # type: ignore[attr-defined]
    return approx


def _terminal_layer(sc: Scenario, tb: ModelTables) -> np.ndarray:
    values = np.zeros((sc.N, sc.M + 1, tb.C))
    values[sc.N - 1] = tb.terminal.reshape(sc.M + 1, tb.C)
    return values


def initial_values(sc: Scenario, cfg: AdpConfig, solver: Solver = backward_induction) -> ValueApprox:
    """Starting approximation for the configured variant, with the terminal layer pinned."""
    tb = build_tables(sc)
    if cfg.regression:
        return regression_init(sc, cfg, solver)
    values = _terminal_layer(sc, tb)
    if cfg.variant == "madp-m":
        s1 = np.arange(sc.M + 1)[:, None]
        for t in range(1, sc.N):
            layer = tb.rho[None, :] * s1 + cfg.k * (sc.N - t)
            layer[:, 0] = 0.0
            values[t - 1] = layer
    return ValueApprox(sc, values)


class GreedyPolicy:
    """Decisions that are greedy with respect to an approximation.

    Each decision maximises the expected immediate reward plus the expected
    approximate value at the next epoch, using the exact solver's tie-break.
    Epoch rules are computed on first use and cached.
    """

    def __init__(self, approx: ValueApprox, backend: str | None = None):
        self.approx = approx
        self.scenario = approx.scenario
        self.tables = build_tables(self.scenario)
        self._kern = get_backend(backend)
        self._rules: dict[int, np.ndarray] = {}

    def rule(self, t: int) -> np.ndarray:
        if t not in self._rules:
            tb, i = self.tables, t - 1
            v_next = np.ascontiguousarray(self.approx.values[t].reshape(-1))
            v_out = np.empty(tb.S)
            pol = np.empty(tb.S, dtype=np.int64)
            self._kern.bellman_epoch(
                i, v_next, v_out, pol, tb.M, tb.Phi, tb.C, tb.rho, tb.capnext, tb.pmf,
                tb.surv, tb.emin, float(tb.K[i]), float(tb.J[i]), float(tb.L[i]),
                tb.act_a1, tb.act_a2, tb.a2cap, 0, 0, np.zeros((1, 1, 1)), 0,
            )
            self._rules[t] = pol
        return self._rules[t]

    def decide(self, t: int, s: State):
        return self.tables.action_of(int(self.rule(t)[self.tables.state_index(s)]))

    def to_policy(self) -> Policy:
        idx = np.stack([self.rule(t) for t in range(1, self.scenario.N)])
        return Policy(self.scenario, self.tables, idx.reshape(self.scenario.T, self.scenario.M + 1, -1))


Checkpoint = Callable[[int, np.ndarray], None]


def adp_run(
    sc: Scenario,
    cfg: AdpConfig,
    checkpoint: Checkpoint | None = None,
    init: ValueApprox | None = None,
) -> tuple[ValueApprox, IterationTrace, GreedyPolicy]:
    """Run ``cfg.tau`` iterations of the configured variant.

    ``checkpoint(n, values)`` is called after every batch of ``cfg.batch``
    iterations with the live ``(N, M+1, C)`` array. Batching has no effect on
    the result. ``init`` overrides the variant's initial approximation.
    """
    cfg.validate_for(sc)
    tb = build_tables(sc)
    kern = get_backend(cfg.backend)
    start = init if init is not None else initial_values(sc, cfg)
    V = np.ascontiguousarray(start.values.reshape(sc.N, tb.S), dtype=float).copy()
    V[sc.N - 1] = tb.terminal

    rng = np.random.default_rng(cfg.seed)
    init_states = np.array(
        [tb.state_index(s) for s in sc.states(include_absorbing=False)], dtype=np.int64
    )
    ref = tb.state_index(sc.reference_state())
    shape = (sc.T, tb.S)
    st_bias, st_nu, st_lam = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    st_count = np.zeros(shape, dtype=np.int64)
    trace = np.empty(cfg.tau)
    used = np.empty(cfg.tau)
    step = cfg.stepsize

    done = 0
    while done < cfg.tau:
        B = min(cfg.batch, cfg.tau - done)
        u = rng.random((B, sc.T + 1))
        alphas = step.alphas(done + 1, B)
        kern.adp_batch(
            V, u, alphas, int(step.adaptive), st_bias, st_nu, st_lam, st_count,
            float(step.inner_w), float(step.alpha_min), int(cfg.monotone), init_states,
            ref, trace[done : done + B], used[done : done + B], tb.M, tb.Phi, tb.C, sc.T,
            tb.rho, tb.capnext, tb.emin, tb.cdf, tb.K, tb.J, tb.L, tb.act_a1, tb.act_a2,
        )
        done += B
        if checkpoint is not None:
            checkpoint(done, V.reshape(sc.N, sc.M + 1, tb.C))

    approx = ValueApprox(sc, V.reshape(sc.N, sc.M + 1, tb.C), n=cfg.tau)
    return approx, IterationTrace(trace, used), GreedyPolicy(approx, cfg.backend)
