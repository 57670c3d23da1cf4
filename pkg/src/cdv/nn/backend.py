"""Kernel backend selection: compiled extension if built, numpy otherwise.

Set ``CDV_PURE_PYTHON=1`` to force the numpy fallback (used by the
benchmark and by tests that compare the two implementations).
"""

from __future__ import annotations

import os

from . import kernels_py

if os.environ.get("CDV_PURE_PYTHON") == "1":
    _impl = kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = kernels_py

lstm_seq_forward = _impl.lstm_seq_forward
lstm_seq_backward = _impl.lstm_seq_backward


def backend_name() -> str:
    return "compiled" if _impl.__name__.endswith("_kernels") else "python"
