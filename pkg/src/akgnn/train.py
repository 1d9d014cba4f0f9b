"""Full-batch training with Adam and validation-loss early stopping.

Randomness is split into named streams of one master seed: stream 0
initializes parameters, stream (1, epoch) drives that epoch's dropout.
Two runs with the same seed, config, data, and build produce
bit-identical results; changing the layer count never perturbs the
parameter init draws of shapes it shares with another depth.
"""

import multiprocessing
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError
from .graph import CsrGraph, build_kernel
from .model import (
    K_PHI_INIT,
    ModelParams,
    Variant,
    collect_grads,
    forward,
    init_params,
    is_decayed,
    lambda_trace,
    predict,
)
from .tape import Tape, backward

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    layers: int = 5
    hidden: int = 64
    dropout: float = 0.6
    lr: float = 0.01
    weight_decay: float = 5e-4
    patience: int = 100
    max_epochs: int = 1000
    seed: int = 0
    variant: Variant = Variant.FULL
    head_depth: int = 1
    freeze_phi: bool = False  # debugging knob: pin phi even on learning variants


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float
    lambdas: tuple[float, ...]  # lam_max per layer after this epoch's update


@dataclass
class TrainResult:
    params: ModelParams  # best-validation snapshot
    best_epoch: int
    best_val_loss: float
    best_val_acc: float
    stopped_epoch: int
    train_accuracy: float
    test_accuracy: float
    history: list[EpochRecord]
    config: TrainConfig


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def init_adam(tensors: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        {k: np.zeros_like(v) for k, v in tensors.items()},
        {k: np.zeros_like(v) for k, v in tensors.items()},
    )


def adam_step(tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float, weight_decay: float = 0.0,
              skip: frozenset[str] | set[str] = frozenset()) -> None:
    """One bias-corrected Adam update, in place.

    Weight decay is added to the gradient (classic L2 style) and only
    for matrix weights; phi and biases decay-free.
    """
    state.step += 1
    t = state.step
    for name in sorted(tensors):
        if name in skip:
            continue
        g = grads[name]
        if weight_decay != 0.0 and is_decayed(name):
            g = g + weight_decay * tensors[name]
        m, v = state.m[name], state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        mhat = m / (1.0 - ADAM_BETA1 ** t)
        vhat = v / (1.0 - ADAM_BETA2 ** t)
        tensors[name] -= lr * mhat / (np.sqrt(vhat) + ADAM_EPS)


def _accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    return float((predict(logits[mask]) == labels[mask]).mean())


def evaluate(params: ModelParams, dataset: Dataset, graph: CsrGraph,
             mask: np.ndarray) -> float:
    """Eval-mode accuracy on the rows in mask."""
    out = forward(params, graph, dataset.features, mode="eval")
    return _accuracy(out.logits.value, dataset.labels, mask)


def _check_config(config: TrainConfig) -> TrainConfig:
    if config.lr <= 0:
        raise ConfigError(f"lr must be positive, got {config.lr}")
    if not 0.0 <= config.dropout < 1.0:
        raise ConfigError(f"dropout must be in [0, 1), got {config.dropout}")
    if config.patience < 1:
        raise ConfigError(f"patience must be >= 1, got {config.patience}")
    if config.max_epochs < 1:
        raise ConfigError(f"max_epochs must be >= 1, got {config.max_epochs}")
    return replace(config, variant=Variant(config.variant))


def train(config: TrainConfig, dataset: Dataset, graph: CsrGraph) -> TrainResult:
    """Train to early stopping; returns the best-validation snapshot.

    Per epoch: rebuild kernels from current phi inside the train-mode
    forward, backprop the train-mask loss, take one Adam step, then
    score validation loss/accuracy in eval mode. The snapshot updates
    only on strict validation-loss improvement, so ties keep the
    earlier epoch.
    """
    config = _check_config(config)
    for name, mask in (("train", dataset.train_idx), ("val", dataset.val_idx),
                       ("test", dataset.test_idx)):
        if mask.size == 0:
            raise DataError(f"{name} mask is empty")

    params = init_params(dataset.num_features, config.hidden, dataset.num_classes,
                         config.layers, config.variant, _stream(config.seed, 0),
                         head_depth=config.head_depth)
    tensors = params.flat()
    adam = init_adam(tensors)
    skip: set[str] = set()
    if not config.variant.learns_phi or config.freeze_phi:
        skip.add("phi")

    best_params = params.copy()
    best_val = np.inf
    best_epoch = 0
    best_val_acc = 0.0
    since_improve = 0
    history: list[EpochRecord] = []
    stopped = 0

    for epoch in range(1, config.max_epochs + 1):
        ep_rng = _stream(config.seed, 1, epoch)
        out = forward(params, graph, dataset.features, mode="train",
                      dropout_rate=config.dropout, rng=ep_rng,
                      labels=dataset.labels, loss_mask=dataset.train_idx)
        adj = backward(out.tape, out.loss)
        grads = collect_grads(params, out, adj)
        adam_step(tensors, grads, adam, config.lr, config.weight_decay, skip)

        ev = forward(params, graph, dataset.features, mode="eval",
                     labels=dataset.labels, loss_mask=dataset.val_idx)
        val_loss = float(ev.loss.value[0, 0])
        val_acc = _accuracy(ev.logits.value, dataset.labels, dataset.val_idx)
        history.append(EpochRecord(
            epoch, float(out.loss.value[0, 0]), val_loss, val_acc,
            tuple(lambda_trace(params).tolist()),
        ))
        stopped = epoch
        if val_loss < best_val:
            best_val = val_loss
            best_val_acc = val_acc
            best_epoch = epoch
            best_params = params.copy()
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= config.patience:
                break

    final = forward(best_params, graph, dataset.features, mode="eval")
    return TrainResult(
        params=best_params,
        best_epoch=best_epoch,
        best_val_loss=float(best_val),
        best_val_acc=best_val_acc,
        stopped_epoch=stopped,
        train_accuracy=_accuracy(final.logits.value, dataset.labels,
                                 dataset.train_idx),
        test_accuracy=_accuracy(final.logits.value, dataset.labels,
                                dataset.test_idx),
        history=history,
        config=config,
    )


def _train_job(args: tuple[TrainConfig, Dataset, CsrGraph]) -> TrainResult:
    return train(*args)


def _run_many(jobs: list[tuple[TrainConfig, Dataset, CsrGraph]],
              workers: int) -> list[TrainResult]:
    if workers <= 1 or len(jobs) <= 1:
        return [_train_job(j) for j in jobs]
    # spawn, not fork: the compiled kernels' OpenMP runtime in the parent
    # makes forking unsafe
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(_train_job, jobs))


VARIANT_ORDER = (Variant.FULL, Variant.NO_LAMBDA, Variant.NO_PT, Variant.NO_READOUT)


@dataclass
class AblationEntry:
    variant: str
    accuracies: list[float]
    mean: float
    std: float  # sample std (ddof=1); 0.0 with a single seed


def run_ablation(dataset: Dataset, graph: CsrGraph, base: TrainConfig,
                 seeds: list[int], jobs: int = 1) -> list[AblationEntry]:
    """Train every variant on every seed; summarize test accuracy."""
    if not seeds:
        raise ConfigError("run_ablation needs at least one seed")
    work = [(replace(base, variant=v, seed=s), dataset, graph)
            for v in VARIANT_ORDER for s in seeds]
    results = _run_many(work, jobs)
    entries = []
    for i, v in enumerate(VARIANT_ORDER):
        accs = [r.test_accuracy for r in results[i * len(seeds):(i + 1) * len(seeds)]]
        std = statistics.stdev(accs) if len(accs) > 1 else 0.0
        entries.append(AblationEntry(v.value, accs, statistics.fmean(accs), std))
    return entries


@dataclass
class SweepRow:
    layers: int
    seed: int
    train_accuracy: float
    test_accuracy: float


def run_layer_sweep(dataset: Dataset, graph: CsrGraph, base: TrainConfig,
                    layer_counts: list[int], seeds: list[int],
                    jobs: int = 1) -> list[SweepRow]:
    """Train at each depth/seed pair; one row per run, in given order."""
    if not layer_counts or not seeds:
        raise ConfigError("run_layer_sweep needs layer counts and seeds")
    work = [(replace(base, layers=k, seed=s), dataset, graph)
            for k in layer_counts for s in seeds]
    results = _run_many(work, jobs)
    rows = []
    for (k, s), r in zip(((k, s) for k in layer_counts for s in seeds), results):
        rows.append(SweepRow(k, s, r.train_accuracy, r.test_accuracy))
    return rows


def propagation_epoch_time(graph: CsrGraph, hidden: int = 64, layers: int = 5,
                           dropout_rate: float = 0.6, reps: int = 5,
                           seed: int = 0) -> float:
    """Median wall-clock seconds for one propagation epoch.

    Covers exactly the depth-dependent work: K kernel builds, K
    dropout-plus-spmm steps, the sum readout, and the backward sweep.
    Feature transform and head are excluded so the measurement isolates
    the propagation stack. One untimed warmup absorbs jit compilation.
    """
    rng = _stream(seed, 0)
    h0 = rng.normal(size=(graph.num_nodes, hidden))
    phi = np.full(layers, K_PHI_INIT)

    def one_epoch() -> None:
        ep_rng = _stream(seed, 1)
        tape = Tape()
        h = tape.leaf(h0)
        phi_nodes = [tape.leaf([[p]]) for p in phi]
        states = []
        for k in range(layers):
            kern = build_kernel(graph, float(phi[k]))
            h = tape.kernel_spmm(
                kern, tape.dropout(h, dropout_rate, "train", ep_rng), phi_nodes[k]
            )
            states.append(h)
        acc = states[0]
        for node in states[1:]:
            acc = tape.add(acc, node)
        backward(tape, tape.sum_all(acc))

    one_epoch()  # warmup: jit compile, page in
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        one_epoch()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)
