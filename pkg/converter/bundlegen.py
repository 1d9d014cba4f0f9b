"""Builders for synthetic raw bundles used by the converter tests.

A bundle mimics the upstream layout: pickled sparse feature blocks
(x, tx, allx), one-hot label blocks (y, ty, ally), an adjacency dict
(graph) and a plain-text test.index.  Feature values and labels are
functions of the global node id, so tests can verify row placement
after conversion without carrying the raw arrays around.
"""

import pickle
from collections import defaultdict
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp

TRAIN_PER_CLASS = 20
VAL_SIZE = 500


def feature_value(node_id):
    """The single nonzero feature value for a node."""
    return 1.0 + (node_id % 3) / 3.0


def feature_col(node_id, dim):
    return node_id % dim


def node_label(node_id, num_classes):
    return node_id % num_classes


def _sparse_rows(ids, dim):
    ids = np.asarray(ids, dtype=np.int64)
    data = np.array([feature_value(i) for i in ids])
    cols = np.array([feature_col(i, dim) for i in ids])
    return sp.csr_matrix((data, (np.arange(ids.size), cols)),
                         shape=(ids.size, dim))


def _onehot(ids, num_classes):
    ids = np.asarray(ids, dtype=np.int64)
    return np.eye(num_classes)[ids % num_classes]


def build_bundle(root, name="cora", num_classes=2, feat_dim=7, test_count=50,
                 gap_offsets=(), isolate_gaps=False, extra_known=10,
                 chords=5, seed=0):
    """Write a synthetic raw bundle under root; returns its description."""
    train_count = TRAIN_PER_CLASS * num_classes
    num_known = train_count + VAL_SIZE + extra_known
    span = test_count + len(gap_offsets)
    assert (span - 1) not in gap_offsets, "last test slot must be listed"
    n = num_known + span

    span_ids = np.arange(num_known, n)
    gap_ids = span_ids[list(gap_offsets)] if gap_offsets else np.empty(0, np.int64)
    listed = np.setdiff1d(span_ids, gap_ids)
    rng = np.random.default_rng(seed)
    test_index = listed[rng.permutation(listed.size)]

    isolated = set(int(i) for i in gap_ids) if isolate_gaps else set()
    connected = [i for i in range(n) if i not in isolated]
    ring = [(connected[i], connected[(i + 1) % len(connected)])
            for i in range(len(connected))]
    pairs = {(min(u, v), max(u, v)) for u, v in ring}
    while len(pairs) < len(connected) + chords:
        u, v = rng.choice(connected, size=2, replace=False)
        pairs.add((min(int(u), int(v)), max(int(u), int(v))))

    graph = defaultdict(list)
    for u, v in sorted(pairs):
        graph[u].append(v)
        graph[v].append(u)
    anchor = connected[0]
    graph[anchor].append(anchor)          # self-loop entry, must be dropped
    graph[anchor].append(graph[anchor][0])  # duplicate entry, must be merged

    root.mkdir(parents=True, exist_ok=True)
    pieces = {
        "x": _sparse_rows(np.arange(train_count), feat_dim),
        "y": _onehot(np.arange(train_count), num_classes),
        "tx": _sparse_rows(test_index, feat_dim),
        "ty": _onehot(test_index, num_classes),
        "allx": _sparse_rows(np.arange(num_known), feat_dim),
        "ally": _onehot(np.arange(num_known), num_classes),
        "graph": dict(graph),
    }
    for piece, obj in pieces.items():
        with (root / f"ind.{name}.{piece}").open("wb") as f:
            pickle.dump(obj, f, protocol=2)
    (root / f"ind.{name}.test.index").write_text(
        "\n".join(str(int(i)) for i in test_index) + "\n")

    return SimpleNamespace(
        raw=root, name=name, n=n, num_known=num_known, dim=feat_dim,
        num_classes=num_classes, train_count=train_count,
        gap_ids=gap_ids.tolist(), test_index=test_index,
        expected_edges=pairs, isolated=sorted(isolated),
    )
