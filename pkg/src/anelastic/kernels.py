"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``ANELASTIC_KERNELS=python`` to force the fallback.
"""
import os

from . import _convolve_py

BACKEND = "python"
convolve2d = _convolve_py.convolve2d

if os.environ.get("ANELASTIC_KERNELS", "").lower() != "python":
    try:
        from ._convolve import convolve2d  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        pass


def available_backends():
    """Return a dict mapping backend name to its ``convolve2d``."""
    out = {"python": _convolve_py.convolve2d}
    try:
        from ._convolve import convolve2d as compiled
        out["compiled"] = compiled
    except ImportError:
        pass
    return out
