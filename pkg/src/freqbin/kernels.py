"""Backend selection for the hot loops.

The compiled extension is used when it was built; set ``FREQBIN_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active one.
"""
import os

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("FREQBIN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

candidate_pairs = _impl.candidate_pairs
greedy_select = _impl.greedy_select
deadtime_filter = _impl.deadtime_filter
diagonal_sums = _impl.diagonal_sums


def backends():
    """Both implementations keyed by name (the compiled one only if built)."""
    out = {"python": _pykernels}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
