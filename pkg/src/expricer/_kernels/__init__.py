"""Hot-kernel backend selection.

Tries the compiled extension first and falls back to the numpy
implementations when it is missing (pure-python install, failed build).
``BACKEND`` names the implementation actually in use; both expose the
same functions with identical semantics.
"""

from . import numpy_backend

try:
    from . import _core as _impl

    BACKEND = _impl.BACKEND_NAME
except ImportError:
    _impl = numpy_backend
    BACKEND = numpy_backend.BACKEND_NAME

crr_backward = _impl.crr_backward
cir_step_chunk = _impl.cir_step_chunk
cdg_step_chunk = _impl.cdg_step_chunk

__all__ = ["BACKEND", "crr_backward", "cir_step_chunk", "cdg_step_chunk",
           "numpy_backend"]
