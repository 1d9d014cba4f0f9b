"""Portable dataset directory format.

A dataset directory holds five files:
  meta.json      {"num_nodes": N, "num_features": D, "num_classes": C}
  edges.csv      one undirected edge per line, "src,dst", 0-indexed, src != dst
  features.csv   sparse triplets "row,col,value"
  labels.csv     N lines, one class id per node
  split.json     {"train": [...], "val": [...], "test": [...]}

load_dataset validates everything loudly: missing files, malformed
lines (with line numbers), overlapping masks, out-of-range labels, and
nodes left isolated after symmetrization all raise DataError with a
distinct message.
"""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import CsrGraph, build_graph

_FILES = ("meta.json", "edges.csv", "features.csv", "labels.csv", "split.json")


@dataclass
class Dataset:
    features: np.ndarray   # (N, D) float64
    labels: np.ndarray     # (N,) int64
    train_idx: np.ndarray  # sorted unique int64
    val_idx: np.ndarray
    test_idx: np.ndarray
    num_classes: int

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


def row_normalize(features: np.ndarray) -> np.ndarray:
    """Scale each row to unit sum. Rows summing to zero pass through."""
    features = np.asarray(features, dtype=np.float64)
    if (features < 0).any():
        r, c = np.argwhere(features < 0)[0]
        raise DataError(f"negative feature value at row {r}, column {c}")
    sums = features.sum(axis=1, keepdims=True)
    return np.divide(features, sums, out=features.copy(), where=sums > 0)


def _read_meta(path: Path) -> tuple[int, int, int]:
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"meta.json: invalid JSON ({exc})") from exc
    out = []
    for key in ("num_nodes", "num_features", "num_classes"):
        v = meta.get(key)
        if not isinstance(v, int) or v < 1:
            raise DataError(f"meta.json: {key} must be a positive integer, got {v!r}")
        out.append(v)
    return tuple(out)


def _read_edges(path: Path, n: int) -> np.ndarray:
    edges = []
    with path.open() as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError
                src, dst = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(
                    f"edges.csv line {lineno}: expected 'src,dst', got {line!r}"
                ) from None
            if src == dst:
                raise DataError(f"edges.csv line {lineno}: self-loop on node {src}")
            if not (0 <= src < n and 0 <= dst < n):
                raise DataError(
                    f"edges.csv line {lineno}: edge ({src},{dst}) out of range "
                    f"for {n} nodes"
                )
            edges.append((src, dst))
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def _read_features(path: Path, n: int, d: int) -> np.ndarray:
    x = np.zeros((n, d), dtype=np.float64)
    keys = []
    with path.open() as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) != 3:
                    raise ValueError
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise DataError(
                    f"features.csv line {lineno}: expected 'row,col,value', "
                    f"got {line!r}"
                ) from None
            if not (0 <= r < n and 0 <= c < d):
                raise DataError(
                    f"features.csv line {lineno}: index ({r},{c}) out of range "
                    f"for a {n}x{d} matrix"
                )
            if not np.isfinite(v):
                raise DataError(f"features.csv line {lineno}: non-finite value {v}")
            x[r, c] = v
            keys.append(r * d + c)
    keys = np.asarray(keys, dtype=np.int64)
    uniq, counts = np.unique(keys, return_counts=True)
    if (counts > 1).any():
        k = int(uniq[counts > 1][0])
        raise DataError(
            f"features.csv: duplicate entry for ({k // d},{k % d})"
        )
    return x


def _read_labels(path: Path, n: int, c: int) -> np.ndarray:
    labels = np.empty(n, dtype=np.int64)
    count = 0
    with path.open() as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                y = int(line)
            except ValueError:
                raise DataError(
                    f"labels.csv line {lineno}: expected an integer, got {line!r}"
                ) from None
            if not 0 <= y < c:
                raise DataError(
                    f"labels.csv line {lineno}: label {y} out of range for "
                    f"{c} classes"
                )
            if count >= n:
                raise DataError(f"labels.csv: more than {n} labels")
            labels[count] = y
            count += 1
    if count != n:
        raise DataError(f"labels.csv: expected {n} labels, got {count}")
    return labels


def _read_split(path: Path, n: int) -> dict[str, np.ndarray]:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"split.json: invalid JSON ({exc})") from exc
    masks: dict[str, np.ndarray] = {}
    for key in ("train", "val", "test"):
        lst = raw.get(key)
        if not isinstance(lst, list) or not all(isinstance(i, int) for i in lst):
            raise DataError(f"split.json: {key} must be a list of integers")
        arr = np.asarray(lst, dtype=np.int64)
        if arr.size and ((arr < 0) | (arr >= n)).any():
            bad = int(arr[(arr < 0) | (arr >= n)][0])
            raise DataError(f"split.json: {key} index {bad} out of range for {n} nodes")
        if np.unique(arr).size != arr.size:
            raise DataError(f"split.json: {key} mask contains duplicates")
        masks[key] = np.sort(arr)
    for a, b in (("train", "val"), ("train", "test"), ("val", "test")):
        overlap = np.intersect1d(masks[a], masks[b])
        if overlap.size:
            raise DataError(
                f"split.json: node {int(overlap[0])} appears in both "
                f"{a} and {b} masks"
            )
    return masks


def load_dataset(path, normalize: bool = True) -> tuple[Dataset, CsrGraph]:
    """Load and validate a dataset directory; returns (Dataset, CsrGraph)."""
    path = Path(path)
    for name in _FILES:
        if not (path / name).is_file():
            raise DataError(f"missing file: {path / name}")
    n, d, c = _read_meta(path / "meta.json")
    edges = _read_edges(path / "edges.csv", n)
    features = _read_features(path / "features.csv", n, d)
    labels = _read_labels(path / "labels.csv", n, c)
    masks = _read_split(path / "split.json", n)

    graph = build_graph(n, edges)
    if (graph.degrees == 0).any():
        isolated = np.flatnonzero(graph.degrees == 0)[:5].tolist()
        raise DataError(
            f"nodes {isolated} are isolated after symmetrization; every node "
            f"needs at least one edge"
        )
    present = np.unique(labels[masks["train"]]) if masks["train"].size else np.array([])
    missing = np.setdiff1d(np.arange(c), present)
    if missing.size:
        warnings.warn(
            f"classes {missing.tolist()} have no training examples",
            stacklevel=2,
        )
    if normalize:
        features = row_normalize(features)
    ds = Dataset(features, labels, masks["train"], masks["val"], masks["test"], c)
    return ds, graph


def write_dataset(path, features: np.ndarray, labels: np.ndarray, edges,
                  train, val, test, num_classes: int) -> None:
    """Write a dataset directory in canonical form (sorted, LF endings)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, d = features.shape

    meta = {"num_nodes": n, "num_features": d, "num_classes": int(num_classes)}
    (path / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")

    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    keys = np.unique(lo * np.int64(n) + hi)
    lines = [f"{k // n},{k % n}" for k in keys]
    (path / "edges.csv").write_text("\n".join(lines) + ("\n" if lines else ""))

    rows, cols = np.nonzero(features)
    lines = [f"{r},{c},{float(features[r, c])!r}" for r, c in zip(rows, cols)]
    (path / "features.csv").write_text("\n".join(lines) + ("\n" if lines else ""))

    (path / "labels.csv").write_text("\n".join(str(int(y)) for y in labels) + "\n")

    split = {
        "train": sorted(int(i) for i in np.asarray(train)),
        "val": sorted(int(i) for i in np.asarray(val)),
        "test": sorted(int(i) for i in np.asarray(test)),
    }
    (path / "split.json").write_text(json.dumps(split, sort_keys=True) + "\n")
