"""Compiled fast paths for the builtin systems.

The environment variable GLIMMRCM_BACKEND selects the implementation:
"numba" (default) compiles the hot kernels with numba.njit, "numpy" runs
the pure numpy/python fallbacks.  When numba is requested but not
importable the fallback is used silently.  Both paths implement the same
algorithms and are cross-checked in the test suite; see
benchmarks/bench_kernels.py for the speed comparison.
"""

import os

try:
    import numba  # noqa: F401
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

BACKEND = os.environ.get("GLIMMRCM_BACKEND", "numba").lower()

if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"GLIMMRCM_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")


def use_numba() -> bool:
    """True when compiled kernels are selected and available."""
    return BACKEND == "numba" and HAS_NUMBA


def active_backend() -> str:
    return "numba" if use_numba() else "numpy"
