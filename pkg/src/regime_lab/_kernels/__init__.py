"""Hot kernels, compiled when available.

The Cython build (``_core``) is used if it imports; otherwise the numpy
versions in ``_fallback``. Set ``REGIME_LAB_PURE_PYTHON=1`` to force the
fallback. ``BACKEND`` names the active implementation.
"""
import importlib
import os

from . import _fallback


def _load_core():
    if os.environ.get("REGIME_LAB_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        return importlib.import_module(__name__ + "._core")
    except ImportError:
        return None


_core = _load_core()

_impl = _core if _core is not None else _fallback
BACKEND = "cython" if _core is not None else "python"

pairwise_pow_dist = _impl.pairwise_pow_dist
assign_nearest = _impl.assign_nearest
forward_backward = _impl.forward_backward
viterbi = _impl.viterbi
mmd2_pairs = _impl.mmd2_pairs

__all__ = [
    "BACKEND",
    "pairwise_pow_dist",
    "assign_nearest",
    "forward_backward",
    "viterbi",
    "mmd2_pairs",
]
