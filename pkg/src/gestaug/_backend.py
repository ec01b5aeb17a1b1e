"""Select the warp kernel at import time.

The compiled extension is used when it was built; otherwise the NumPy
fallback. Set ``GESTAUG_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _warp_py

BACKEND = "python"
warp_affine = _warp_py.warp_affine

if os.environ.get("GESTAUG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _warp
    except ImportError:
        pass
    else:
        warp_affine = _warp.warp_affine
        BACKEND = "cython"


def available_backends():
    """Map backend name to kernel for every kernel importable in this process."""
    kernels = {"python": _warp_py.warp_affine}
    try:
        from . import _warp
    except ImportError:
        return kernels
    kernels["cython"] = _warp.warp_affine
    return kernels
