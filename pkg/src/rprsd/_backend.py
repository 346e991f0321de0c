"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
implementations are used.  Set ``RPRSD_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)


def _load():
    if os.environ.get("RPRSD_PURE_PYTHON", "").strip() not in ("", "0"):
        return _pykernels
    try:
        from . import _ckernels
    except ImportError as exc:
        log.debug("compiled kernels unavailable (%s); using numpy fallback", exc)
        return _pykernels
    return _ckernels


kernels = _load()
python_kernels = _pykernels


def compiled_kernels():
    """The compiled module, or None if it is not built."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


BACKEND = kernels.NAME
