import numpy as np
import pytest

from sairp.model import CapacityGrid, DemandModel, Scenario

ACCEPTANCE_LINES: dict[int, str] = {}


def make_scenario(M=2, T=3, theta=0.8, epsilon=0.1, delta_c=0.05, beta=2.0, K=0.1, J=0.05,
                  L=1.0, demand=None, Phi=None, rng=None):
    """Small scenario with constant or random prices; demand defaults to Poisson(1)."""
    def series(x):
        if callable(x):
            return [float(x(rng)) for _ in range(T)]
        return [float(x)] * T

    if demand is None:
        demand = DemandModel.poisson([1.0] * T)
    return Scenario(M=M, N=T + 1, grid=CapacityGrid(theta, epsilon), delta_c=delta_c, beta=beta,
                    K=series(K), J=series(J), L=series(L), demand=demand, Phi=Phi)


def random_tiny_scenario(rng: np.random.Generator, explicit: bool = True):
    """Random instance with M <= 2, N <= 4 and demand support of size <= 2."""
    M = int(rng.integers(1, 3))
    T = int(rng.integers(1, 4))
    theta, epsilon = [(0.8, 0.1), (0.8, 0.05), (0.6, 0.2)][int(rng.integers(0, 3))]
    rows = []
    for _ in range(T):
        p = float(rng.uniform(0.1, 0.9))
        lo = int(rng.integers(0, 2))
        row = [0.0] * (lo + 2)
        row[lo], row[lo + 1] = p, 1.0 - p
        rows.append(row)
    beta = float(rng.uniform(1.0, 3.0))
    return Scenario(
        M=M, N=T + 1, grid=CapacityGrid(theta, epsilon), delta_c=float(rng.uniform(0.01, 0.2)),
        beta=beta, K=rng.uniform(0.0, 0.5, T).tolist(), J=rng.uniform(0.0, 0.5, T).tolist(),
        L=rng.uniform(0.0, 3.0, T).tolist(),
        demand=DemandModel.explicit(rows) if explicit else DemandModel.poisson(rng.uniform(0.2, 2, T)),
        Phi=int(rng.integers(1, M + 1)),
    )


@pytest.fixture
def acceptance_report():
    def record(criterion: int, passed: bool, detail: str) -> None:
        line = f"CRITERION {criterion:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[criterion] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
