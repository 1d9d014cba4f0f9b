"""Pure-numpy reference implementations of the sparse hot kernels.

Same contracts as _numba_kernels; used when numba is unavailable or
disabled via AKGNN_NUMBA=0. Kept free of package imports so benchmarks
can load it side by side with the compiled variant.
"""

import numpy as np


def spmm(offsets, cols, vals, dense):
    """Row-compressed sparse times dense: out[i] = sum_e vals[e] * dense[cols[e]].

    The pattern must have no empty rows (kernel patterns always carry the
    diagonal), which np.add.reduceat needs to segment correctly.
    """
    contrib = vals[:, None] * dense[cols]
    return np.add.reduceat(contrib, offsets[:-1], axis=0)


def pattern_dot_rows(offsets, cols, row_ids, dvals, g, dense):
    """Per-row partial sums of sum_e dvals[e] * <g[row_e], dense[cols[e]]>."""
    t = np.einsum("ec,ec->e", g[row_ids], dense[cols])
    return np.add.reduceat(dvals * t, offsets[:-1])
