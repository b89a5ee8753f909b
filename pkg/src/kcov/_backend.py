"""Kernel backend selection.

The compiled extension is used when importable; ``KCOV_PURE_PYTHON=1``
forces the pure-Python fallback (useful for benchmarking and for platforms
without a compiler).
"""

import os

from . import _pykernels

kernels = _pykernels
if os.environ.get("KCOV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _pykernels

BACKEND = kernels.BACKEND


def get(name):
    """Return a kernel module by name ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
