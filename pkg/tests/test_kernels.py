import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import make_scenario
from sairp import kernels
from sairp.adp import AdpConfig, adp_run
from sairp.exact import (
    SolveOptions,
    backward_induction,
    monotone_backward_induction,
    policy_expected_value,
)
from sairp.model import DemandModel
from sairp.stepsize import StepsizeSpec

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled kernels not built")


def scenario():
    rng = np.random.default_rng(0)
    return make_scenario(M=4, T=5, epsilon=0.02, delta_c=0.03, K=lambda r: r.uniform(0, 0.3),
                         J=lambda r: r.uniform(0, 0.3), L=lambda r: r.uniform(0.5, 5), rng=rng,
                         demand=DemandModel.poisson(rng.uniform(0.5, 4, 5)))


@pytest.mark.parametrize("solver", [backward_induction, monotone_backward_induction])
@pytest.mark.parametrize("cap", ["none", "theorem-cap"])
@pytest.mark.parametrize("mode", ["on-demand", "cached"])
def test_exact_solvers_bit_identical(solver, cap, mode):
    sc = scenario()
    out = [solver(sc, SolveOptions(probability_mode=mode, replacement_cap_mode=cap, backend=b))
           for b in ("python", "compiled")]
    assert np.array_equal(out[0][0].values, out[1][0].values)
    assert np.array_equal(out[0][1].index, out[1][1].index)


def test_policy_evaluation_bit_identical():
    sc = scenario()
    _, pol = backward_induction(sc)
    a = policy_expected_value(sc, pol, backend="python").values
    b = policy_expected_value(sc, pol, backend="compiled").values
    assert np.array_equal(a, b)


@pytest.mark.parametrize("variant", ["avi", "madp", "madp-m"])
@pytest.mark.parametrize("stepsize", ["harmonic:w=30", "adaptive:w=20"])
def test_adp_bit_identical(variant, stepsize):
    sc = scenario()
    runs = [adp_run(sc, AdpConfig(variant=variant, tau=150, seed=4, batch=40, backend=b,
                                  stepsize=StepsizeSpec.parse(stepsize)))
            for b in ("python", "compiled")]
    assert np.array_equal(runs[0][0].values, runs[1][0].values)
    assert np.array_equal(runs[0][1].values, runs[1][1].values)
    assert np.array_equal(runs[0][1].alphas, runs[1][1].alphas)


def test_backend_lookup():
    assert kernels.get_backend("python") is kernels.python_backend
    assert kernels.get_backend("compiled") is kernels.compiled_backend
    with pytest.raises(ValueError):
        kernels.get_backend("gpu")


def test_environment_forces_fallback():
    env = dict(os.environ, SAIRP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import sairp; print(sairp.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
