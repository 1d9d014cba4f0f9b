"""Convert a raw Planetoid bundle into a portable dataset directory.

Usage:
    python3 convert.py --raw DIR --name {cora,citeseer,pubmed} --out DIR

Reads the eight upstream files (ind.<name>.{x,y,tx,ty,allx,ally,graph,
test.index}), assembles feature and label matrices in global node order,
builds the standard split (train = first 20*C nodes, val = the next 500,
test = the listed test indices), and writes meta.json, edges.csv,
features.csv, labels.csv and split.json, plus a conversion_report.txt
listing counts and anomalies.

Bundles whose test index range has holes (the citeseer quirk) get the
missing feature rows zero-filled and label 0; affected node ids go in
the report.  No normalization happens here; the loader owns that.

A second, independent pass re-reads the raw files and recounts nodes,
edges and classes against the emitted output; any mismatch aborts.
"""

import argparse
import json
import pickle
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

NAMES = ("cora", "citeseer", "pubmed")
PIECES = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")
TRAIN_PER_CLASS = 20
VAL_SIZE = 500


class ConversionError(Exception):
    """Raised when the raw bundle is missing pieces or self-inconsistent."""


def _read_index(path: Path) -> np.ndarray:
    values = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ConversionError(
                f"{path.name} line {lineno}: expected an integer, got {line!r}"
            ) from None
    if not values:
        raise ConversionError(f"{path.name}: empty test index")
    if len(set(values)) != len(values):
        raise ConversionError(f"{path.name}: duplicate test indices")
    return np.asarray(values, dtype=np.int64)


def load_bundle(raw_dir, name: str) -> dict:
    raw_dir = Path(raw_dir)
    parts = {}
    for piece in PIECES:
        path = raw_dir / f"ind.{name}.{piece}"
        if not path.is_file():
            raise ConversionError(f"missing file: {path}")
        if piece == "test.index":
            parts[piece] = _read_index(path)
        else:
            with path.open("rb") as f:
                parts[piece] = pickle.load(f, encoding="latin1")
    return parts


def _dense(m) -> np.ndarray:
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def _onehot_to_labels(onehot: np.ndarray, what: str) -> np.ndarray:
    nonzero = (onehot != 0).sum(axis=1)
    bad = np.flatnonzero(nonzero != 1)
    if bad.size:
        r = int(bad[0])
        raise ConversionError(
            f"{what}: row {r} has {int(nonzero[r])} nonzero entries, "
            f"expected exactly one class"
        )
    return onehot.argmax(axis=1).astype(np.int64)


@dataclass
class Converted:
    features: np.ndarray
    labels: np.ndarray
    edges: np.ndarray          # unique undirected pairs, lo < hi, sorted
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    num_classes: int
    raw_entries: int           # directed adjacency entries incl. repeats
    self_loop_entries: int
    gap_ids: list = field(default_factory=list)
    isolated_ids: list = field(default_factory=list)


def _collect_edges(graph_dict, num_nodes: int):
    if not isinstance(graph_dict, dict):
        raise ConversionError(f"graph: expected a dict, got {type(graph_dict).__name__}")
    pairs = []
    raw_entries = 0
    self_loops = 0
    for u, neighbors in graph_dict.items():
        u = int(u)
        if not 0 <= u < num_nodes:
            raise ConversionError(f"graph: node {u} out of range for {num_nodes} nodes")
        for v in neighbors:
            v = int(v)
            raw_entries += 1
            if not 0 <= v < num_nodes:
                raise ConversionError(
                    f"graph: neighbor {v} of node {u} out of range for {num_nodes} nodes"
                )
            if u == v:
                self_loops += 1
                continue
            pairs.append((min(u, v), max(u, v)))
    if not pairs:
        raise ConversionError("graph: no edges")
    arr = np.asarray(pairs, dtype=np.int64)
    keys = np.unique(arr[:, 0] * np.int64(num_nodes) + arr[:, 1])
    edges = np.stack([keys // num_nodes, keys % num_nodes], axis=1)
    return edges, raw_entries, self_loops


def assemble(parts: dict) -> Converted:
    for piece in ("x", "tx", "allx"):
        if not sp.issparse(parts[piece]):
            raise ConversionError(f"{piece}: expected a sparse matrix")
    allx, tx = parts["allx"], parts["tx"]
    y, ty, ally = _dense(parts["y"]), _dense(parts["ty"]), _dense(parts["ally"])
    test_index = parts["test.index"]

    num_known, dim = allx.shape
    if tx.shape[1] != dim:
        raise ConversionError(f"tx has {tx.shape[1]} columns, allx has {dim}")
    if ally.shape[0] != num_known:
        raise ConversionError(f"ally has {ally.shape[0]} rows, allx has {num_known}")
    num_classes = ally.shape[1]
    if ty.shape[1] != num_classes or y.shape[1] != num_classes:
        raise ConversionError(
            f"label widths disagree: y {y.shape[1]}, ty {ty.shape[1]}, "
            f"ally {num_classes}"
        )
    if tx.shape[0] != test_index.size or ty.shape[0] != test_index.size:
        raise ConversionError(
            f"test.index lists {test_index.size} nodes but tx has {tx.shape[0]} "
            f"rows and ty has {ty.shape[0]}"
        )
    if parts["x"].shape[0] != y.shape[0]:
        raise ConversionError(
            f"x has {parts['x'].shape[0]} rows but y has {y.shape[0]}"
        )

    # the train block must be the leading slice of the known block
    k = y.shape[0]
    if (parts["x"] != allx[:k]).nnz != 0:
        raise ConversionError("x is not the leading block of allx")
    if not np.array_equal(y, ally[:k]):
        raise ConversionError("y disagrees with the leading rows of ally")

    lo, hi = int(test_index.min()), int(test_index.max())
    if lo < num_known:
        raise ConversionError(
            f"test index {lo} overlaps the {num_known} nodes covered by allx"
        )
    num_nodes = hi + 1
    gap_ids = np.setdiff1d(np.arange(num_known, num_nodes), test_index)

    features = np.zeros((num_nodes, dim), dtype=np.float64)
    features[:num_known] = allx.toarray()
    features[test_index] = tx.toarray()

    labels = np.zeros(num_nodes, dtype=np.int64)  # gap rows keep label 0
    labels[:num_known] = _onehot_to_labels(ally, "ally")
    labels[test_index] = _onehot_to_labels(ty, "ty")

    train_count = TRAIN_PER_CLASS * num_classes
    if k != train_count:
        raise ConversionError(
            f"y has {k} rows, expected {TRAIN_PER_CLASS} per class x "
            f"{num_classes} classes = {train_count}"
        )
    if train_count + VAL_SIZE > num_known:
        raise ConversionError(
            f"allx covers {num_known} nodes, too few for {train_count} train "
            f"+ {VAL_SIZE} val"
        )

    edges, raw_entries, self_loops = _collect_edges(parts["graph"], num_nodes)
    degree = np.zeros(num_nodes, dtype=np.int64)
    np.add.at(degree, edges[:, 0], 1)
    np.add.at(degree, edges[:, 1], 1)

    return Converted(
        features=features,
        labels=labels,
        edges=edges,
        train=np.arange(train_count),
        val=np.arange(train_count, train_count + VAL_SIZE),
        test=np.sort(test_index),
        num_classes=num_classes,
        raw_entries=raw_entries,
        self_loop_entries=self_loops,
        gap_ids=gap_ids.tolist(),
        isolated_ids=np.flatnonzero(degree == 0).tolist(),
    )


def write_output(out_dir, conv: Converted) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, d = conv.features.shape

    meta = {"num_nodes": n, "num_features": d, "num_classes": conv.num_classes}
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")

    lines = [f"{lo},{hi}" for lo, hi in conv.edges]
    (out / "edges.csv").write_text("\n".join(lines) + "\n")

    rows, cols = np.nonzero(conv.features)
    lines = [f"{r},{c},{float(conv.features[r, c])!r}" for r, c in zip(rows, cols)]
    (out / "features.csv").write_text("\n".join(lines) + ("\n" if lines else ""))

    (out / "labels.csv").write_text(
        "\n".join(str(int(v)) for v in conv.labels) + "\n")

    split = {
        "train": conv.train.tolist(),
        "val": conv.val.tolist(),
        "test": conv.test.tolist(),
    }
    (out / "split.json").write_text(json.dumps(split, sort_keys=True) + "\n")


def recount(raw_dir, name: str, out_dir) -> tuple[int, int, int]:
    """Re-read raw files and emitted output; return (nodes, edges, classes).

    Independent of assemble(): fresh pickle loads, a different edge walk,
    and plain-text parses of the emitted files.  Aborts on any mismatch.
    """
    raw = Path(raw_dir)
    with (raw / f"ind.{name}.graph").open("rb") as f:
        graph_dict = pickle.load(f, encoding="latin1")
    test_index = _read_index(raw / f"ind.{name}.test.index")
    with (raw / f"ind.{name}.ally").open("rb") as f:
        ally = pickle.load(f, encoding="latin1")

    seen = set(int(i) for i in test_index)
    undirected = set()
    for u, neighbors in graph_dict.items():
        seen.add(int(u))
        for v in neighbors:
            seen.add(int(v))
            if int(u) != int(v):
                undirected.add((min(int(u), int(v)), max(int(u), int(v))))
    raw_nodes = max(seen) + 1
    raw_edges = len(undirected)
    raw_classes = int(_dense(ally).shape[1])

    out = Path(out_dir)
    meta = json.loads((out / "meta.json").read_text())
    edge_lines = [ln for ln in (out / "edges.csv").read_text().splitlines() if ln]
    label_lines = [ln for ln in (out / "labels.csv").read_text().splitlines() if ln]

    if meta["num_nodes"] != raw_nodes:
        raise ConversionError(
            f"recount mismatch: emitted {meta['num_nodes']} nodes, raw files "
            f"imply {raw_nodes}"
        )
    if len(label_lines) != raw_nodes:
        raise ConversionError(
            f"recount mismatch: {len(label_lines)} labels for {raw_nodes} nodes"
        )
    if len(edge_lines) != raw_edges:
        raise ConversionError(
            f"recount mismatch: emitted {len(edge_lines)} edges, raw graph "
            f"holds {raw_edges}"
        )
    if meta["num_classes"] != raw_classes:
        raise ConversionError(
            f"recount mismatch: emitted {meta['num_classes']} classes, raw "
            f"label width is {raw_classes}"
        )
    return raw_nodes, raw_edges, raw_classes


def write_report(out_dir, name: str, conv: Converted,
                 counts: tuple[int, int, int]) -> None:
    test_lo, test_hi = int(conv.test.min()), int(conv.test.max())
    span = test_hi - test_lo + 1
    lines = [
        f"conversion report: {name}",
        f"nodes: {conv.features.shape[0]}",
        f"feature dim: {conv.features.shape[1]}",
        f"classes: {conv.num_classes}",
        f"adjacency entries read: {conv.raw_entries}",
        f"self-loop entries dropped: {conv.self_loop_entries}",
        f"undirected edges written: {len(conv.edges)}",
        f"split sizes: train {len(conv.train)}, val {len(conv.val)}, "
        f"test {len(conv.test)}",
        f"test index span: {test_lo}..{test_hi} ({span} slots, "
        f"{len(conv.test)} listed)",
        f"zero-filled rows: {len(conv.gap_ids)}",
    ]
    if conv.gap_ids:
        ids = ", ".join(str(i) for i in conv.gap_ids)
        lines.append(f"zero-filled node ids (features zeroed, label 0): {ids}")
    lines.append(f"isolated nodes: {len(conv.isolated_ids)}")
    if conv.isolated_ids:
        ids = ", ".join(str(i) for i in conv.isolated_ids)
        lines.append(f"isolated node ids (degree 0, will fail strict loaders): {ids}")
    lines.append(
        f"recount (independent pass): nodes {counts[0]} ok, edges {counts[1]} ok, "
        f"classes {counts[2]} ok"
    )
    (Path(out_dir) / "conversion_report.txt").write_text("\n".join(lines) + "\n")


def convert(raw_dir, name: str, out_dir) -> Converted:
    parts = load_bundle(raw_dir, name)
    conv = assemble(parts)
    write_output(out_dir, conv)
    counts = recount(raw_dir, name, out_dir)
    write_report(out_dir, name, conv, counts)
    return conv


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="convert a raw Planetoid bundle to a portable dataset directory")
    parser.add_argument("--raw", required=True, help="directory with the raw files")
    parser.add_argument("--name", required=True, choices=NAMES)
    parser.add_argument("--out", required=True, help="output dataset directory")
    args = parser.parse_args(argv)
    try:
        conv = convert(args.raw, args.name, args.out)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"converted {args.name}: {conv.features.shape[0]} nodes, "
          f"{len(conv.edges)} edges, {conv.num_classes} classes "
          f"-> {args.out}")
    if conv.gap_ids or conv.isolated_ids:
        print(f"anomalies noted in conversion_report.txt: "
              f"{len(conv.gap_ids)} zero-filled, {len(conv.isolated_ids)} isolated")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
