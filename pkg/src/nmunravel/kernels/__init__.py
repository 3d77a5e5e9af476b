"""Hot loops of the ensemble engine, compiled with numba when available.

Both implementations share one signature set; :data:`BACKEND` names the one
in use. ``NMUNRAVEL_DISABLE_NUMBA=1`` selects the numpy path.
"""

from .._backend import BACKEND, USE_NUMBA
from . import _numpy as numpy_kernels

if USE_NUMBA:
    from . import _numba as numba_kernels

    active = numba_kernels
else:
    numba_kernels = None
    active = numpy_kernels

kde_logsum = active.kde_logsum
kde_mean_shift = active.kde_mean_shift
jump_step = active.jump_step
diffusion_step = active.diffusion_step
qsd_step = active.qsd_step
LOG_TINY = numpy_kernels.LOG_TINY

__all__ = [
    "BACKEND", "LOG_TINY", "active", "numba_kernels", "numpy_kernels",
    "kde_logsum", "kde_mean_shift", "jump_step", "diffusion_step", "qsd_step",
]
