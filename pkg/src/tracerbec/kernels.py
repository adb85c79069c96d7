"""Backend selection for the hot per-mode loops.

The compiled extension is used when it was built; otherwise the NumPy
implementation is used.  Set ``TRACERBEC_KERNELS=python`` to force the
fallback.
"""
import os

from . import _kernels_py

try:
    if os.environ.get("TRACERBEC_KERNELS", "").lower() == "python":
        raise ImportError("fallback requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

field_flow = _impl.field_flow
particle_force = _impl.particle_force
friction_sum = _impl.friction_sum


def backends():
    """Map of available backend name -> module (used by tests and the benchmark)."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
