"""Hot-loop dispatch: compiled kernels when built, numpy fallback otherwise.

Set ``TERRAPSD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("TERRAPSD_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

window_moments = _impl.window_moments
bin_accumulate = _impl.bin_accumulate
fill_gaps = _impl.fill_gaps


def backends():
    """Available kernel modules keyed by name (for tests and benchmarks)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
