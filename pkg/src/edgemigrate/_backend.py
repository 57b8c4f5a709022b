"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``EDGEMIGRATE_PURE_PYTHON=1`` to force the fallback.
"""
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

python_kernels = _pykernels
compiled_kernels = None

if not os.environ.get("EDGEMIGRATE_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using numpy fallback")

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"


def available_backends():
    out = {"python": python_kernels}
    if compiled_kernels is not None:
        out["cython"] = compiled_kernels
    return out
