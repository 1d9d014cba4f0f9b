"""Command-line entry points.

Subcommands: train, eval, ablate, sweep-layers, spectrum, gradcheck.
Run directories are written deterministically: metrics.json and the
CSVs contain no timestamps, floats are serialized with full repr
precision, and JSON keys are sorted. Exit codes: 0 success, 1 data or
numeric failure (diagnostic on stderr), 2 usage.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import backend
from .data import load_dataset
from .errors import AkgnnError, DataError
from .graph import build_graph, build_kernel, dense_kernel, filter_weights, spectrum
from .model import (
    ModelParams,
    Variant,
    collect_grads,
    forward,
    init_params,
    replace_tensors,
)
from .tape import backward, finite_diff_check
from .train import (
    TrainConfig,
    evaluate,
    run_ablation,
    run_layer_sweep,
    train,
)

CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: ModelParams) -> None:
    """JSON checkpoint; float lists round-trip exactly via repr."""
    obj = {
        "format_version": CHECKPOINT_VERSION,
        "variant": params.variant.value,
        "dims": {
            "num_features": params.num_features,
            "hidden": params.hidden,
            "num_classes": params.num_classes,
            "layers": params.layers,
            "head_depth": len(params.head_w),
        },
        "params": {
            "phi": params.phi.tolist(),
            "w_star": None if params.w_star is None else params.w_star.tolist(),
            "layer_w": [w.tolist() for w in params.layer_w],
            "head_w": [w.tolist() for w in params.head_w],
            "head_b": [b.tolist() for b in params.head_b],
        },
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n")


def load_checkpoint(path) -> ModelParams:
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint {path}: invalid JSON ({exc})") from exc
    if obj.get("format_version") != CHECKPOINT_VERSION:
        raise DataError(
            f"checkpoint {path}: unsupported format_version "
            f"{obj.get('format_version')!r}"
        )
    try:
        dims = obj["dims"]
        p = obj["params"]
        w_star = p["w_star"]
        return ModelParams(
            variant=Variant(obj["variant"]),
            num_features=dims["num_features"],
            hidden=dims["hidden"],
            num_classes=dims["num_classes"],
            layers=dims["layers"],
            phi=np.asarray(p["phi"], dtype=np.float64),
            w_star=None if w_star is None else np.asarray(w_star, dtype=np.float64),
            layer_w=[np.asarray(w, dtype=np.float64) for w in p["layer_w"]],
            head_w=[np.asarray(w, dtype=np.float64) for w in p["head_w"]],
            head_b=[np.asarray(b, dtype=np.float64) for b in p["head_b"]],
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"checkpoint {path}: malformed ({exc})") from exc


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _write_loss_curve(path: Path, history) -> None:
    lines = ["epoch,train_loss,val_loss,val_acc"]
    for r in history:
        lines.append(f"{r.epoch},{r.train_loss!r},{r.val_loss!r},{r.val_acc!r}")
    path.write_text("\n".join(lines) + "\n")


def _write_lambda_trace(path: Path, layers: int, history) -> None:
    header = "epoch," + ",".join(f"lambda_{k + 1}" for k in range(layers))
    init_row = "0," + ",".join(["2.0"] * layers)  # phi starts at 1
    lines = [header, init_row]
    for r in history:
        lines.append(f"{r.epoch}," + ",".join(repr(v) for v in r.lambdas))
    path.write_text("\n".join(lines) + "\n")


def _config_dict(args, config: TrainConfig) -> dict:
    out = {
        "data": str(args.data),
        "normalize": not args.no_normalize,
        "backend": backend.BACKEND,
        "variant": config.variant.value,
    }
    for key in ("layers", "hidden", "dropout", "lr", "weight_decay", "patience",
                "max_epochs", "seed", "head_depth"):
        out[key] = getattr(config, key)
    return out


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        layers=args.layers, hidden=args.hidden, dropout=args.dropout,
        lr=args.lr, weight_decay=args.weight_decay, patience=args.patience,
        max_epochs=args.max_epochs, seed=args.seed,
        variant=Variant(args.variant), head_depth=args.head_depth,
    )


def cmd_train(args) -> int:
    ds, graph = load_dataset(args.data, normalize=not args.no_normalize)
    config = _train_config(args)
    result = train(config, ds, graph)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", _config_dict(args, config))
    save_checkpoint(out / "checkpoint.json", result.params)
    _write_json(out / "metrics.json", {
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss,
        "best_val_acc": result.best_val_acc,
        "stopped_epoch": result.stopped_epoch,
        "train_accuracy": result.train_accuracy,
        "test_accuracy": result.test_accuracy,
    })
    _write_loss_curve(out / "loss_curve.csv", result.history)
    _write_lambda_trace(out / "lambda_trace.csv", config.layers, result.history)

    print(f"stopped at epoch {result.stopped_epoch} "
          f"(best validation at {result.best_epoch})")
    print(f"test accuracy: {result.test_accuracy:.4f}")
    print(f"run directory: {out}")
    return 0


def cmd_eval(args) -> int:
    params = load_checkpoint(args.checkpoint)
    ds, graph = load_dataset(args.data, normalize=not args.no_normalize)
    if params.num_features != ds.num_features or params.num_classes != ds.num_classes:
        print(
            f"error: checkpoint expects {params.num_features} features / "
            f"{params.num_classes} classes but dataset has {ds.num_features} / "
            f"{ds.num_classes}", file=sys.stderr)
        return 1
    mask = {"train": ds.train_idx, "val": ds.val_idx, "test": ds.test_idx}[args.mask]
    acc = evaluate(params, ds, graph, mask)
    print(f"{args.mask} accuracy: {acc:.4f}")
    return 0


def cmd_ablate(args) -> int:
    ds, graph = load_dataset(args.data, normalize=not args.no_normalize)
    base = _train_config(args)
    entries = run_ablation(ds, graph, base, args.seeds, jobs=args.jobs)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "ablation.json", {
            e.variant: {"mean": e.mean, "std": e.std, "accuracies": e.accuracies}
            for e in entries
        })
    for e in entries:
        print(f"{e.variant:<11} {e.mean:.4f} +- {e.std:.4f}  "
              f"({len(e.accuracies)} seeds)")
    return 0


def cmd_sweep_layers(args) -> int:
    ds, graph = load_dataset(args.data, normalize=not args.no_normalize)
    base = _train_config(args)
    rows = run_layer_sweep(ds, graph, base, args.layer_counts, args.seeds,
                           jobs=args.jobs)
    lines = ["layers,seed,train_acc,test_acc"]
    for r in rows:
        lines.append(f"{r.layers},{r.seed},{r.train_accuracy!r},{r.test_accuracy!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "layer_sweep.csv").write_text(text)
    print(text, end="")
    return 0


def cmd_spectrum(args) -> int:
    ds, graph = load_dataset(args.data, normalize=not args.no_normalize)
    w = filter_weights(args.phi)
    kern = build_kernel(graph, args.phi)
    pat = graph.kernel_pattern
    diag = kern.values[pat.diag_slots]
    off_max = 0.0
    if kern.values.size > graph.num_nodes:
        off = np.delete(kern.values, pat.diag_slots)
        off_max = float(np.abs(off).max())
    dist_to_identity = max(float(np.abs(diag - 1.0).max()), off_max)
    diag_mass = float(diag.sum() / kern.values.sum())

    stats = {
        "phi": w.phi, "a": w.a, "b": w.b, "lambda_max": w.lam_max,
        "num_nodes": graph.num_nodes, "num_edges": graph.num_edges,
        "diagonal_mass_fraction": diag_mass,
        "max_abs_dev_from_identity": dist_to_identity,
    }
    print(f"phi = {w.phi!r}: a = {w.a!r}, b = {w.b!r}, lambda_max = {w.lam_max!r}")
    print(f"diagonal mass fraction: {diag_mass:.6f}")
    print(f"max |S - I|: {dist_to_identity:.6e}")
    if graph.num_nodes <= 500:
        eig = spectrum(dense_kernel(graph, args.phi))
        lo = float(eig.eigenvalues[0])
        hi = float(eig.eigenvalues[-1])
        stats["eigenvalue_min"] = lo
        stats["eigenvalue_max"] = hi
        print(f"eigenvalues in [{lo:.6f}, {hi:.6f}]")
    else:
        print(f"graph has {graph.num_nodes} nodes (> 500): "
              f"dense spectrum skipped, sparse stats only")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "spectrum.json", stats)
    return 0


def cmd_gradcheck(args) -> int:
    n = args.nodes
    if n < 3:
        raise DataError(f"gradcheck needs at least 3 nodes, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(9,)))
    ring = [(i, (i + 1) % n) for i in range(n)]
    target = min(n // 2, n * (n - 3) // 2)  # chords available beyond the ring
    chords: set = set()
    while len(chords) < target:
        i, j = int(rng.integers(n)), int(rng.integers(n))
        if i != j and (i, j) not in chords and (j, i) not in chords \
                and (i, j) not in ring and (j, i) not in ring:
            chords.add((i, j))
    graph = build_graph(n, ring + sorted(chords))

    d, h, c, layers = 5, 6, 3, 3
    x = rng.random((n, d))
    labels = rng.integers(0, c, size=n)
    mask = np.arange(n)
    template = init_params(d, h, c, layers, Variant(args.variant), rng)
    template.phi[:] = rng.uniform(0.3, 2.0, size=layers)  # varied, away from the kink

    def closure(tensors):
        p = replace_tensors(template, tensors)
        out = forward(p, graph, x, mode="eval", labels=labels, loss_mask=mask)
        grads = collect_grads(p, out, backward(out.tape, out.loss))
        return float(out.loss.value[0, 0]), grads

    worst, per_param = finite_diff_check(closure, template.flat(), eps=args.eps)
    for name in sorted(per_param):
        print(f"{name:<12} max rel err {per_param[name]:.3e}")
    worst_name = max(per_param, key=per_param.get)
    if worst < 1e-4:
        print(f"gradcheck passed: worst {worst:.3e} ({worst_name})")
        return 0
    print(f"gradcheck FAILED: {worst_name} rel err {worst:.3e} >= 1e-4")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="akgnn",
        description="Adaptive-kernel graph network for node classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data(p):
        p.add_argument("--data", required=True, help="dataset directory")
        p.add_argument("--no-normalize", action="store_true",
                       help="skip feature row normalization")

    def add_hyper(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--layers", type=int, default=5)
        p.add_argument("--hidden", type=int, default=64)
        p.add_argument("--dropout", type=float, default=0.6)
        p.add_argument("--lr", type=float, default=0.01)
        p.add_argument("--weight-decay", type=float, default=5e-4)
        p.add_argument("--patience", type=int, default=100)
        p.add_argument("--max-epochs", type=int, default=1000)
        p.add_argument("--head-depth", type=int, default=1)
        p.add_argument("--variant", default="full",
                       choices=[v.value for v in Variant])
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for multi-run commands")

    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("train", help="train one model", formatter_class=fmt)
    add_data(p)
    add_hyper(p)
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint", formatter_class=fmt)
    add_data(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mask", default="test", choices=["train", "val", "test"])
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="compare model variants", formatter_class=fmt)
    add_data(p)
    add_hyper(p)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("sweep-layers", help="train across depths",
                       formatter_class=fmt)
    add_data(p)
    add_hyper(p)
    p.add_argument("--layer-counts", type=int, nargs="+",
                   default=[1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep_layers)

    p = sub.add_parser("spectrum", help="inspect one kernel", formatter_class=fmt)
    add_data(p)
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check",
                       formatter_class=fmt)
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--variant", default="full",
                   choices=[v.value for v in Variant])
    p.set_defaults(fn=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AkgnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
