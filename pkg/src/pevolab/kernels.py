"""Backend selection for the hot kernels.

The compiled extension ``pevolab._kernels`` is used when it imports; otherwise
the numpy versions in ``pevolab._kernels_py`` are used. Setting the environment
variable ``PEVOLAB_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("PEVOLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

ramp = _active.ramp
weighted_cutoff_integrand = _active.weighted_cutoff_integrand
cumulative_weighted_integral = _active.cumulative_weighted_integral
partial_weighted_integral = _active.partial_weighted_integral
kn_apply = _active.kn_apply

__all__ = [
    "BACKEND",
    "compiled_backend",
    "python_backend",
    "ramp",
    "weighted_cutoff_integrand",
    "cumulative_weighted_integral",
    "partial_weighted_integral",
    "kn_apply",
]
