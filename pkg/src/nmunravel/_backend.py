"""Selects the compiled or the pure-numpy implementation of the hot loops.

Set ``NMUNRAVEL_DISABLE_NUMBA=1`` before import to force the numpy path.
"""

import os

_FLAG = os.environ.get("NMUNRAVEL_DISABLE_NUMBA", "").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")
BACKEND = "numba" if USE_NUMBA else "numpy"
