"""Kernel backend selection.

The compiled extension is used when it imports. Otherwise the pure-Python
fallback is used. Setting ``SAIRP_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

python_backend: ModuleType = _pykernels
compiled_backend: ModuleType | None
try:
    from . import _ckernels as compiled_backend  # type: ignore[attr-defined, no-redef]
except ImportError:  # pragma: no cover - depends on the build
    compiled_backend = None

if compiled_backend is not None and os.environ.get("SAIRP_PURE_PYTHON", "") not in ("1", "true"):
    backend: ModuleType = compiled_backend
else:
    backend = python_backend

BACKEND_NAME = "compiled" if backend is compiled_backend else "python"


def get_backend(name: str | None = None) -> ModuleType:
    """Return the named backend (``"compiled"`` or ``"python"``), or the active one."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "compiled":
        if compiled_backend is None:
            raise ImportError("the compiled kernel extension is not built")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
