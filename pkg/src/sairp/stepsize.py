"""Stepsize rules for smoothing ADP observations into the value approximation.

The deterministic rules depend only on their parameters and the global
iteration counter ``n``. The adaptive rule keeps bias and noise statistics
for each (epoch, state) pair and is evaluated inside the ADP kernels.
:func:`adaptive_alpha` is the reference version of that recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

KINDS = ("one-over-n", "harmonic", "stc", "adaptive")


def one_over_n(n: int) -> float:
    if n < 1:
        raise ValueError("n must be at least 1")
    return 1.0 / n


def harmonic_alpha(w: float, n: int) -> float:
    """``w / (w + n - 1)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return w / (w + n - 1.0)


def stc_alpha(alpha0: float, mu1: float, mu2: float, zeta: float, n: int) -> float:
    """Generalised search-then-converge rule; equals ``alpha0`` at ``n = 1``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return float(alpha0)
    lead = mu2 / n + mu1
    return alpha0 * lead / (lead + n**zeta - 1.0)


@dataclass(frozen=True)
class AdaptiveStats:
    """Running statistics of the bias-adjusted rule for a single entry."""

    bias: float = 0.0
    nu: float = 0.0
    lam: float = 0.0
    count: int = 0


def adaptive_alpha(
    st: AdaptiveStats, v_hat: float, v_prev: float, inner_w: float = 25000.0,
    alpha_min: float = 1e-4,
) -> tuple[float, AdaptiveStats]:
    """Bias-adjusted stepsize and the updated statistics.

    The smoothed error is ``bias`` and the smoothed squared error is ``nu``.
    Both are updated with an inner harmonic weight.

    The noise variance is estimated as ``(nu - bias**2) / (1 + lam)``.
    The stepsize is ``1 - variance / nu``, clamped to ``[alpha_min, 1]``.
    """
    cnt = st.count + 1
    eta = inner_w / (inner_w + cnt - 1.0)
    e = v_hat - v_prev
    bias = (1.0 - eta) * st.bias + eta * e
    nu = (1.0 - eta) * st.nu + eta * (e * e)
    if nu <= 0.0:
        alpha = 1.0
    else:
        sigma2 = (nu - bias * bias) / (1.0 + st.lam)
        alpha = min(max(1.0 - sigma2 / nu, alpha_min), 1.0)
    lam = (1.0 - alpha) * (1.0 - alpha) * st.lam + alpha * alpha
    return alpha, AdaptiveStats(bias, nu, lam, cnt)


@dataclass(frozen=True)
class StepsizeSpec:
    kind: str = "harmonic"
    w: float = 25000.0
    alpha0: float = 1.0
    mu1: float = 600.0
    mu2: float = 1000.0
    zeta: float = 0.7
    inner_w: float = 25000.0
    alpha_min: float = 1e-4

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown stepsize kind {self.kind!r}; expected one of {KINDS}")
        if self.w <= 0 or self.inner_w <= 0:
            raise ValueError("w and inner_w must be positive")
        if not 0 < self.alpha0 <= 1:
            raise ValueError("alpha0 must lie in (0, 1]")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("mu1 and mu2 must be nonnegative")
        if not 0.5 < self.zeta <= 1:
            raise ValueError("zeta must lie in (0.5, 1]")

    @property
    def adaptive(self) -> bool:
        return self.kind == "adaptive"

    def alpha(self, n: int) -> float:
        """Deterministic stepsize at iteration ``n``."""
        if self.kind == "one-over-n":
            return one_over_n(n)
        if self.kind == "harmonic":
            return harmonic_alpha(self.w, n)
        if self.kind == "stc":
            return stc_alpha(self.alpha0, self.mu1, self.mu2, self.zeta, n)
        raise ValueError("the adaptive rule depends on observations, not only on n")

    def alphas(self, start: int, count: int) -> np.ndarray:
        """Stepsizes for iterations ``start .. start + count - 1``."""
        if self.adaptive:
            return np.ones(count)
        return np.array([self.alpha(n) for n in range(start, start + count)])

    def label(self) -> str:
        if self.kind == "harmonic":
            return f"harmonic:w={self.w:g}"
        if self.kind == "stc":
            return (f"stc:alpha0={self.alpha0:g},mu1={self.mu1:g},"
                    f"mu2={self.mu2:g},zeta={self.zeta:g}")
        if self.kind == "adaptive":
            return f"adaptive:inner_w={self.inner_w:g}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "StepsizeSpec":
        """Parse ``kind[:key=value,...]``, for example ``harmonic:w=2500``."""
        kind, _, params = text.strip().partition(":")
        spec = cls(kind=kind)
        if not params:
            return spec
        updates: dict[str, float] = {}
        for item in params.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in {"w", "alpha0", "mu1", "mu2", "zeta", "inner_w", "alpha_min"}:
                raise ValueError(f"bad stepsize parameter {item!r} in {text!r}")
            updates[key] = float(val)
        if kind == "adaptive" and "w" in updates and "inner_w" not in updates:
            updates["inner_w"] = updates.pop("w")
        return replace(spec, **updates)
