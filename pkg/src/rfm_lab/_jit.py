"""Numba switch.

Set ``RFM_LAB_BACKEND=numpy`` to force the pure-numpy kernels (also used
automatically when numba cannot be imported).
"""
import os

_requested = os.environ.get("RFM_LAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"RFM_LAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


BACKEND = "numba" if (HAVE_NUMBA and _requested == "numba") else "numpy"
