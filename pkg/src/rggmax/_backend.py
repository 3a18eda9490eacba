"""Select the compiled kernels when available, the numpy fallback otherwise.

Set ``RGGMAX_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("RGGMAX_PURE", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"

BACKENDS = {"python": _fallback}
if BACKEND == "cython":
    BACKENDS["cython"] = kernels


def get(name=None):
    """Kernel module by name; ``None`` means the active backend."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available") from None
