"""Backend selection for the sparse hot kernels.

AKGNN_NUMBA controls dispatch, read once at import:
  auto (default)  use numba if it imports, else fall back to numpy
  1               require numba; raise if it cannot be loaded
  0               force the pure-numpy path

Both backends return identical results up to summation-order rounding
(each is individually deterministic).
"""

import os

import numpy as np

from . import _numpy_kernels
from .errors import ConfigError

_flag = os.environ.get("AKGNN_NUMBA", "auto").strip().lower()
if _flag not in ("auto", "1", "0"):
    raise ConfigError(
        f"AKGNN_NUMBA must be one of auto/1/0, got {_flag!r}"
    )

_impl = _numpy_kernels
BACKEND = "numpy"
if _flag != "0":
    try:
        from . import _numba_kernels
        _impl = _numba_kernels
        BACKEND = "numba"
    except Exception as exc:  # numba missing or failed to initialize
        if _flag == "1":
            raise ConfigError(
                f"AKGNN_NUMBA=1 but the numba backend failed to load: {exc}"
            ) from exc


def spmm(pattern, vals, dense):
    """S @ dense for the CSR pattern with entry values vals."""
    return _impl.spmm(pattern.offsets, pattern.cols, vals, dense)


def pattern_dot(pattern, dvals, g, dense):
    """sum_e dvals[e] * <g[row_e], dense[col_e]>, accumulated per row then summed."""
    rows = _impl.pattern_dot_rows(
        pattern.offsets, pattern.cols, pattern.row_ids, dvals, g, dense
    )
    return float(np.sum(rows))
