"""Converter tests: round-trips through the primary loader plus the
abort diagnostics for broken bundles."""

import json
import pickle
import warnings

import numpy as np
import pytest

import convert
from akgnn.data import load_dataset
from akgnn.errors import DataError
from bundlegen import VAL_SIZE, feature_col, feature_value, node_label


def run(bundle, out, name=None):
    return convert.main(["--raw", str(bundle.raw),
                         "--name", name or bundle.name,
                         "--out", str(out)])


def _retamper(path, fn):
    """Load a pickle, apply fn, write it back."""
    with path.open("rb") as f:
        obj = pickle.load(f, encoding="latin1")
    obj = fn(obj)
    with path.open("wb") as f:
        pickle.dump(obj, f, protocol=2)


def test_round_trip_through_loader(bundle_factory, tmp_path):
    b = bundle_factory()
    out = tmp_path / "out"
    assert run(b, out) == 0

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dataset, graph = load_dataset(out, normalize=False)

    assert dataset.num_nodes == b.n
    assert dataset.num_classes == b.num_classes
    assert dataset.train_idx.tolist() == list(range(b.train_count))
    assert dataset.val_idx.tolist() == list(
        range(b.train_count, b.train_count + VAL_SIZE))
    assert dataset.test_idx.tolist() == sorted(b.test_index.tolist())
    assert graph.num_edges == len(b.expected_edges)

    # every node's feature row and label sit at the global id, including
    # test rows that arrived in shuffled test.index order
    for i in range(b.n):
        row = dataset.features[i]
        assert row[feature_col(i, b.dim)] == feature_value(i)
        assert row.sum() == feature_value(i)  # single nonzero per row
        assert dataset.labels[i] == node_label(i, b.num_classes)

    report = (out / "conversion_report.txt").read_text()
    assert f"undirected edges written: {graph.num_edges}" in report
    assert "self-loop entries dropped: 1" in report
    assert "zero-filled rows: 0" in report
    assert "isolated nodes: 0" in report
    assert f"recount (independent pass): nodes {b.n} ok" in report


def test_edges_canonical_and_deduped(bundle_factory, tmp_path):
    b = bundle_factory()
    out = tmp_path / "out"
    assert run(b, out) == 0
    lines = (out / "edges.csv").read_text().splitlines()
    pairs = [tuple(map(int, ln.split(","))) for ln in lines]
    assert len(pairs) == len(set(pairs))
    assert pairs == sorted(pairs)
    assert all(lo < hi for lo, hi in pairs)
    assert set(pairs) == b.expected_edges


def test_gap_rows_zero_filled(bundle_factory, tmp_path, capsys):
    b = bundle_factory(name="citeseer", num_classes=3, gap_offsets=(3, 17))
    out = tmp_path / "out"
    assert run(b, out) == 0
    assert "2 zero-filled" in capsys.readouterr().out

    dataset, _ = load_dataset(out, normalize=False)
    for g in b.gap_ids:
        assert not dataset.features[g].any()
        assert dataset.labels[g] == 0
        assert g not in dataset.train_idx
        assert g not in dataset.val_idx
        assert g not in dataset.test_idx

    report = (out / "conversion_report.txt").read_text()
    assert "zero-filled rows: 2" in report
    assert ", ".join(str(g) for g in b.gap_ids) in report
    span = (b.n - b.num_known)
    assert f"({span} slots, {span - 2} listed)" in report


def test_rerun_is_byte_identical(bundle_factory, tmp_path):
    b = bundle_factory(num_classes=3, gap_offsets=(5,))
    first, second = tmp_path / "a", tmp_path / "b"
    assert run(b, first) == 0
    assert run(b, second) == 0
    names = ["meta.json", "edges.csv", "features.csv", "labels.csv",
             "split.json", "conversion_report.txt"]
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_isolated_gap_nodes_flagged(bundle_factory, tmp_path):
    b = bundle_factory(name="citeseer", gap_offsets=(4,), isolate_gaps=True)
    out = tmp_path / "out"
    assert run(b, out) == 0

    report = (out / "conversion_report.txt").read_text()
    assert "isolated nodes: 1" in report
    assert str(b.gap_ids[0]) in report
    # the strict loader refuses such graphs; the report is the audit trail
    with pytest.raises(DataError, match="isolated"):
        load_dataset(out)


def test_pubmed_style_prefix(bundle_factory, tmp_path):
    b = bundle_factory(name="pubmed", num_classes=3, test_count=30)
    out = tmp_path / "out"
    assert run(b, out) == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["num_classes"] == 3
    assert meta["num_nodes"] == b.n


def test_missing_file_aborts(bundle_factory, tmp_path, capsys):
    b = bundle_factory()
    (b.raw / "ind.cora.graph").unlink()
    assert run(b, tmp_path / "out") == 1
    err = capsys.readouterr().err
    assert "missing file" in err and "ind.cora.graph" in err


def test_multi_hot_label_row_aborts(bundle_factory, tmp_path, capsys):
    b = bundle_factory()

    def spoil(ally):
        ally[50] = 1.0  # two active classes
        return ally

    _retamper(b.raw / "ind.cora.ally", spoil)
    assert run(b, tmp_path / "out") == 1
    err = capsys.readouterr().err
    assert "expected exactly one class" in err
    assert "row 50" in err


def test_duplicate_test_index_aborts(bundle_factory, tmp_path, capsys):
    b = bundle_factory()
    idx = b.raw / "ind.cora.test.index"
    first = idx.read_text().splitlines()[0]
    idx.write_text(idx.read_text() + first + "\n")
    assert run(b, tmp_path / "out") == 1
    assert "duplicate test indices" in capsys.readouterr().err


def test_test_index_overlapping_known_block_aborts(bundle_factory, tmp_path,
                                                   capsys):
    b = bundle_factory()
    idx = b.raw / "ind.cora.test.index"
    lines = idx.read_text().splitlines()
    lines[0] = str(b.num_known - 1)  # collide with the allx block
    idx.write_text("\n".join(lines) + "\n")
    assert run(b, tmp_path / "out") == 1
    assert "overlaps" in capsys.readouterr().err


def test_graph_reference_out_of_range_aborts(bundle_factory, tmp_path, capsys):
    b = bundle_factory()

    def spoil(graph):
        graph[0] = list(graph.get(0, [])) + [b.n + 7]
        return graph

    _retamper(b.raw / "ind.cora.graph", spoil)
    assert run(b, tmp_path / "out") == 1
    assert f"neighbor {b.n + 7} of node 0 out of range" in capsys.readouterr().err


def test_x_diverging_from_allx_aborts(bundle_factory, tmp_path, capsys):
    b = bundle_factory()

    def spoil(x):
        x = x.tolil()
        x[0, 0] = 99.0
        return x.tocsr()

    _retamper(b.raw / "ind.cora.x", spoil)
    assert run(b, tmp_path / "out") == 1
    assert "x is not the leading block of allx" in capsys.readouterr().err


def test_wrong_train_block_size_aborts(bundle_factory, tmp_path, capsys):
    b = bundle_factory()
    _retamper(b.raw / "ind.cora.x", lambda x: x[:-1])
    _retamper(b.raw / "ind.cora.y", lambda y: y[:-1])
    assert run(b, tmp_path / "out") == 1
    err = capsys.readouterr().err
    assert f"expected 20 per class x {b.num_classes} classes" in err


def test_usage_error_exits_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        convert.main(["--raw", str(tmp_path)])  # --name and --out missing
    assert exc.value.code == 2
