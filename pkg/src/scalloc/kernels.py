"""Backend selection for the bit-level kernels.

The compiled extension is used when it was built; otherwise, or when
``SCALLOC_PURE_PYTHON`` is set to a non-empty value, the numpy fallback is
used. Both expose the same four functions.
"""

import os

from scalloc import _fallback

if os.environ.get("SCALLOC_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from scalloc import _kernels as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

updown_counter = _impl.updown_counter
column_popcount = _impl.column_popcount
mux_gather = _impl.mux_gather
lfsr_states = _impl.lfsr_states
