"""Sparse undirected graphs and the adaptive spectral kernel family.

For a per-layer scalar phi the filter is built from a graph with
learnable maximum eigenvalue lam_max = 1 + relu(phi):

    A_k  = a * I + b * A      with  a = 2*relu(phi) / (1 + relu(phi)),
                                    b = 2 / (1 + relu(phi))
    S_k  = D_k^{-1/2} A_k D_k^{-1/2}   (D_k = rowsum diagonal of A_k)

a is computed as 2 - b, which keeps a + b == 2 exact in float64 for
every finite phi. At phi <= 0 the kernel degenerates to the plain
symmetric normalization of A (pure low-pass); as phi grows it
approaches the identity (all-pass).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import backend
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateKernelError,
    DimensionError,
    NumericError,
)


@dataclass(frozen=True)
class _KernelPattern:
    """CSR pattern of A with the diagonal merged in (kernel support)."""

    offsets: np.ndarray    # int64, (N+1,)
    cols: np.ndarray       # int64, (nnz,) sorted within each row
    row_ids: np.ndarray    # int64, (nnz,) row of each stored entry
    diag_slots: np.ndarray # int64, (N,) position of entry (i, i)


@dataclass(frozen=True)
class CsrGraph:
    """Simple undirected graph; both directions of every edge are stored."""

    num_nodes: int
    row_offsets: np.ndarray  # int64, (N+1,)
    col_indices: np.ndarray  # int64, sorted within each row
    degrees: np.ndarray      # int64, (N,)

    @property
    def num_edges(self) -> int:
        """Undirected edge count."""
        return self.col_indices.shape[0] // 2

    @cached_property
    def kernel_pattern(self) -> _KernelPattern:
        n = self.num_nodes
        rows = np.concatenate(
            [np.repeat(np.arange(n, dtype=np.int64), self.degrees),
             np.arange(n, dtype=np.int64)]
        )
        cols = np.concatenate([self.col_indices, np.arange(n, dtype=np.int64)])
        order = np.argsort(rows * np.int64(n) + cols, kind="stable")
        rows = rows[order]
        cols = cols[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.degrees + 1, out=offsets[1:])
        diag_slots = np.flatnonzero(rows == cols)
        return _KernelPattern(offsets, cols, rows, diag_slots)


def build_graph(num_nodes: int, edges) -> CsrGraph:
    """Build a CsrGraph from undirected edge pairs (one per edge, any order).

    Rejects out-of-range endpoints and self-loops, naming the offending
    pair. Duplicate pairs (in either direction) collapse to one edge.
    """
    if num_nodes < 1:
        raise DataError(f"num_nodes must be >= 1, got {num_nodes}")
    e = np.asarray(edges, dtype=np.int64)
    if e.size == 0:
        e = e.reshape(0, 2)
    if e.ndim != 2 or e.shape[1] != 2:
        raise DataError(f"edges must be (E, 2) index pairs, got shape {e.shape}")
    oob = (e < 0) | (e >= num_nodes)
    if oob.any():
        i = int(np.flatnonzero(oob.any(axis=1))[0])
        raise DataError(
            f"edge ({e[i, 0]}, {e[i, 1]}) out of range for {num_nodes} nodes"
        )
    loops = e[:, 0] == e[:, 1]
    if loops.any():
        i = int(np.flatnonzero(loops)[0])
        raise DataError(f"self-loop ({e[i, 0]}, {e[i, 1]}) is not allowed")

    both = np.concatenate([e, e[:, ::-1]], axis=0)
    keys = np.unique(both[:, 0] * np.int64(num_nodes) + both[:, 1])
    rows = keys // num_nodes
    cols = keys % num_nodes
    degrees = np.bincount(rows, minlength=num_nodes).astype(np.int64)
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(degrees, out=offsets[1:])
    return CsrGraph(num_nodes, offsets, cols.astype(np.int64), degrees)


@dataclass(frozen=True)
class FilterWeights:
    """Scalar coefficients of one adaptive filter."""

    phi: float
    a: float        # self-loop weight, 2*relu(phi)/(1+relu(phi))
    b: float        # neighbor weight, 2/(1+relu(phi))
    lam_max: float  # 1 + relu(phi)


def filter_weights(phi: float) -> FilterWeights:
    phi = float(phi)
    if not np.isfinite(phi):
        raise NumericError(f"phi must be finite, got {phi}")
    r = phi if phi > 0.0 else 0.0
    lam_max = 1.0 + r
    b = 2.0 / lam_max
    a = 2.0 - b  # keeps a + b == 2 exactly
    return FilterWeights(phi, a, b, lam_max)


def _coeff_grads(phi: float) -> tuple[float, float]:
    """(da/dphi, db/dphi); relu'(0) is pinned to 0."""
    if phi <= 0.0:
        return 0.0, 0.0
    s = 1.0 + phi
    db = -2.0 / (s * s)
    return -db, db


@dataclass(frozen=True)
class AdaptiveKernel:
    """Renormalized filter S_k with per-entry derivatives wrt phi."""

    graph: CsrGraph
    weights: FilterWeights
    values: np.ndarray   # (nnz,) aligned with graph.kernel_pattern
    dvalues: np.ndarray  # (nnz,) d values / d phi

    def apply(self, dense: np.ndarray) -> np.ndarray:
        """S @ dense."""
        if dense.shape[0] != self.graph.num_nodes:
            raise DimensionError(
                f"kernel over {self.graph.num_nodes} nodes cannot multiply "
                f"matrix with {dense.shape[0]} rows"
            )
        return backend.spmm(self.graph.kernel_pattern, self.values, dense)

    def grad_phi_dot(self, g: np.ndarray, h: np.ndarray) -> float:
        """sum_ij g_i . (dS_ij/dphi) h_j, the phi-adjoint of y = S @ h."""
        return backend.pattern_dot(
            self.graph.kernel_pattern, self.dvalues, g, h
        )


def build_kernel(graph: CsrGraph, phi: float) -> AdaptiveKernel:
    """Assemble S_k and dS_k/dphi on the pattern of A plus the diagonal.

    At phi <= 0 the self weight vanishes, so rows of degree-0 nodes would
    be all zero; that is rejected as degenerate. With phi > 0 an isolated
    node normalizes to an exact identity row.
    """
    w = filter_weights(phi)
    if w.phi <= 0.0 and (graph.degrees == 0).any():
        isolated = np.flatnonzero(graph.degrees == 0)[:5].tolist()
        raise DegenerateKernelError(
            f"phi={w.phi} gives zero rows for degree-0 nodes {isolated}"
        )
    pat = graph.kernel_pattern
    deg = graph.degrees.astype(np.float64)
    da, db = _coeff_grads(w.phi)

    dk = w.a + w.b * deg   # row sums of A_k
    ddk = da + db * deg

    dk_i = dk[pat.row_ids]
    dk_j = dk[pat.cols]
    p = dk_i * dk_j
    sq = np.sqrt(p)
    values = w.b / sq
    dvalues = db / sq - w.b * (ddk[pat.row_ids] * dk_j + dk_i * ddk[pat.cols]) / (2.0 * p * sq)

    ds = pat.diag_slots
    values[ds] = w.a / dk
    dvalues[ds] = (da * dk - w.a * ddk) / (dk * dk)
    return AdaptiveKernel(graph, w, values, dvalues)


def _adjacency_dense(graph: CsrGraph) -> np.ndarray:
    a = np.zeros((graph.num_nodes, graph.num_nodes), dtype=np.float64)
    rows = np.repeat(np.arange(graph.num_nodes, dtype=np.int64), graph.degrees)
    a[rows, graph.col_indices] = 1.0
    return a


_DENSE_NODE_LIMIT = 10_000


def dense_kernel(graph: CsrGraph, phi: float) -> np.ndarray:
    """Dense S_k, computed through dense ops as a cross-check of build_kernel.

    Matches the sparse entries bit for bit: the diagonal survives the
    round trip because sqrt(x*x) == x in round-to-nearest float64.
    """
    n = graph.num_nodes
    if n > _DENSE_NODE_LIMIT:
        raise ConfigError(
            f"dense kernel limited to {_DENSE_NODE_LIMIT} nodes, got {n}"
        )
    w = filter_weights(phi)
    if w.phi <= 0.0 and (graph.degrees == 0).any():
        isolated = np.flatnonzero(graph.degrees == 0)[:5].tolist()
        raise DegenerateKernelError(
            f"phi={w.phi} gives zero rows for degree-0 nodes {isolated}"
        )
    dk = w.a + w.b * graph.degrees.astype(np.float64)
    ak = w.a * np.eye(n) + w.b * _adjacency_dense(graph)
    return ak / np.sqrt(np.outer(dk, dk))


def unnormalized_kernel(graph: CsrGraph, phi: float) -> np.ndarray:
    """a*I + b*Ahat with Ahat = D^{-1/2} A D^{-1/2} (dense).

    Every member of this family is a polynomial in Ahat, so any two of
    them commute; the renormalized kernels do not share that property.
    """
    n = graph.num_nodes
    if n > _DENSE_NODE_LIMIT:
        raise ConfigError(
            f"dense kernel limited to {_DENSE_NODE_LIMIT} nodes, got {n}"
        )
    if (graph.degrees == 0).any():
        isolated = np.flatnonzero(graph.degrees == 0)[:5].tolist()
        raise DegenerateKernelError(
            f"symmetric normalization undefined for degree-0 nodes {isolated}"
        )
    w = filter_weights(phi)
    d = graph.degrees.astype(np.float64)
    ahat = _adjacency_dense(graph) / np.sqrt(np.outer(d, d))
    return w.a * np.eye(n) + w.b * ahat


@dataclass(frozen=True)
class DenseSpectrum:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # orthonormal columns


_SPECTRUM_NODE_LIMIT = 500


def spectrum(m: np.ndarray) -> DenseSpectrum:
    """Full eigendecomposition of a small symmetric matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"spectrum needs a square matrix, got shape {m.shape}")
    if m.shape[0] > _SPECTRUM_NODE_LIMIT:
        raise ConfigError(
            f"dense spectrum limited to {_SPECTRUM_NODE_LIMIT} nodes, got {m.shape[0]}"
        )
    skew = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if skew > 1e-10:
        raise ContractError(f"matrix is not symmetric (max |M - M^T| = {skew:.3e})")
    w, v = np.linalg.eigh(m)
    return DenseSpectrum(w, v)
