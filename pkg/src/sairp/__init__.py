"""Battery swap station scheduling, allocation and replacement via exact and approximate DP.

The main entry points:
- :mod:`sairp.model` holds the MDP.
- :mod:`sairp.exact` holds backward induction and monotone backward induction.
- :mod:`sairp.adp` holds the approximate dynamic programming variants.
- :mod:`sairp.stepsize`, :mod:`sairp.simulation` and :mod:`sairp.experiments`
  provide stepsize rules, policy simulation and metrics, and scenario
  construction.
"""

__version__ = "0.1.0"

from .kernels import BACKEND_NAME  # noqa: E402,F401
