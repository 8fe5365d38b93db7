"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--M 3] [--T 48] [--tau 2000] [--repeat 3]

Both backends solve the same builtin scenario and must produce bit-identical
results. Each timing reported is the best of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sairp.adp import AdpConfig, adp_run
from sairp.exact import SolveOptions, backward_induction, monotone_backward_induction
from sairp.experiments import builtin_scenario
from sairp.kernels import compiled_backend
from sairp.stepsize import StepsizeSpec


def best_of(fn, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", type=int, default=6)
    p.add_argument("--M", type=int, default=3)
    p.add_argument("--T", type=int, default=48)
    p.add_argument("--tau", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if compiled_backend is None:
        raise SystemExit("the compiled extension is not built; run 'pip install -e . --no-build-isolation'")

    sc = builtin_scenario(args.scenario, M=args.M, horizon=args.T)
    cases = {
        "bi": lambda b: backward_induction(sc, SolveOptions(backend=b))[0].values,
        "mbi:cap": lambda b: monotone_backward_induction(
            sc, SolveOptions(backend=b, replacement_cap_mode="theorem-cap"))[0].values,
        f"adp:madp tau={args.tau}": lambda b: adp_run(
            sc, AdpConfig(variant="madp", tau=args.tau, stepsize=StepsizeSpec(w=2500), backend=b))[0].values,
    }
    print(f"scenario {args.scenario}, M={args.M}, T={args.T}, best of {args.repeat}")
    print(f"{'case':<24}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  identical")
    for name, fn in cases.items():
        t_py, v_py = best_of(lambda: fn("python"), args.repeat)
        t_c, v_c = best_of(lambda: fn("compiled"), args.repeat)
        print(f"{name:<24}{t_py:>12.3f}{t_c:>14.4f}{t_py / t_c:>9.0f}x  {np.array_equal(v_py, v_c)}")


if __name__ == "__main__":
    main()
