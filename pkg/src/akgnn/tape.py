"""Reverse-mode autodiff over dense float64 matrices.

Define-by-run: every primitive records a TapeNode holding the forward
value plus whatever the backward pass needs. backward() walks the tape
once in reverse and accumulates adjoints by addition, so its cost is
linear in the number of recorded nodes. The tape is rebuilt per forward
pass; nothing here is retained across steps.
"""

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, ContractError, DimensionError
from .graph import AdaptiveKernel


@dataclass
class TapeNode:
    nid: int
    op: str
    parents: tuple[int, ...]
    value: np.ndarray
    aux: Any = None


class Tape:
    """Append-only operation record. All node values are 2-D float64."""

    def __init__(self) -> None:
        self.nodes: list[TapeNode] = []

    def _record(self, op: str, parents: tuple[TapeNode, ...], value: np.ndarray,
                aux: Any = None) -> TapeNode:
        node = TapeNode(len(self.nodes), op, tuple(p.nid for p in parents), value, aux)
        self.nodes.append(node)
        return node

    def leaf(self, value) -> TapeNode:
        value = np.asarray(value, dtype=np.float64)
        if value.ndim != 2:
            raise ContractError(f"tape values must be 2-D, got shape {value.shape}")
        return self._record("leaf", (), value)

    def matmul(self, a: TapeNode, b: TapeNode) -> TapeNode:
        if a.value.shape[1] != b.value.shape[0]:
            raise DimensionError(
                f"matmul: inner dims differ, {a.value.shape} @ {b.value.shape}"
            )
        return self._record("matmul", (a, b), a.value @ b.value)

    def add(self, a: TapeNode, b: TapeNode) -> TapeNode:
        if a.value.shape != b.value.shape:
            raise DimensionError(
                f"add: shapes differ, {a.value.shape} vs {b.value.shape}"
            )
        return self._record("add", (a, b), a.value + b.value)

    def add_bias(self, a: TapeNode, bias: TapeNode) -> TapeNode:
        """a + bias with bias a (1, C) row broadcast over rows of a."""
        if bias.value.shape != (1, a.value.shape[1]):
            raise DimensionError(
                f"add_bias: expected bias shape (1, {a.value.shape[1]}), "
                f"got {bias.value.shape}"
            )
        return self._record("add_bias", (a, bias), a.value + bias.value)

    def relu(self, a: TapeNode) -> TapeNode:
        # subgradient at 0 is 0: backward masks on value > 0 strictly
        return self._record("relu", (a,), np.maximum(a.value, 0.0))

    def dropout(self, a: TapeNode, rate: float, mode: str,
                rng: np.random.Generator | None = None) -> TapeNode:
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        if mode not in ("train", "eval"):
            raise ConfigError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
        if mode == "eval" or rate == 0.0:
            return self._record("dropout", (a,), a.value, None)
        if rng is None:
            raise ConfigError("train-mode dropout needs an rng")
        keep = rng.random(a.value.shape) >= rate
        scale = keep * (1.0 / (1.0 - rate))
        return self._record("dropout", (a,), a.value * scale, scale)

    def kernel_spmm(self, kernel: AdaptiveKernel, h: TapeNode,
                    phi: TapeNode | None = None) -> TapeNode:
        """S_k @ h. If phi (the 1x1 parameter node the kernel was built
        from) is given, the backward pass routes d loss / d phi to it."""
        if phi is not None and phi.value.shape != (1, 1):
            raise ContractError(f"phi node must be 1x1, got {phi.value.shape}")
        parents = (h,) if phi is None else (h, phi)
        return self._record("kernel_spmm", parents, kernel.apply(h.value), kernel)

    def sum_all(self, a: TapeNode) -> TapeNode:
        return self._record("sum", (a,), np.array([[a.value.sum()]]))

    def masked_softmax_xent(self, logits: TapeNode, labels: np.ndarray,
                            mask: np.ndarray) -> TapeNode:
        """Mean cross-entropy of softmax(logits) over the rows in mask."""
        mask = np.asarray(mask, dtype=np.int64)
        if mask.size == 0:
            raise ConfigError("masked_softmax_xent: mask is empty")
        labels = np.asarray(labels, dtype=np.int64)
        z = logits.value[mask]
        z = z - z.max(axis=1, keepdims=True)  # row shift for stability
        ez = np.exp(z)
        p = ez / ez.sum(axis=1, keepdims=True)
        picked = labels[mask]
        if (picked < 0).any() or (picked >= z.shape[1]).any():
            raise ContractError(
                f"labels on masked rows must lie in [0, {z.shape[1]})"
            )
        logp = z - np.log(ez.sum(axis=1, keepdims=True))
        loss = -logp[np.arange(mask.size), picked].mean()
        return self._record(
            "masked_xent", (logits,), np.array([[loss]]), (mask, picked, p)
        )


def backward(tape: Tape, loss: TapeNode, seed: float = 1.0) -> dict[int, np.ndarray]:
    """Adjoints of every node reachable from loss, keyed by node id.

    loss must be 1x1. Adjoints accumulate by addition in reverse
    construction order, so repeated runs are bit-identical.
    """
    if loss.value.shape != (1, 1):
        raise ContractError(f"loss node must be 1x1, got shape {loss.value.shape}")
    adj: dict[int, np.ndarray] = {loss.nid: np.array([[float(seed)]])}

    def acc(pid: int, contrib: np.ndarray) -> None:
        if pid in adj:
            adj[pid] += contrib
        else:
            adj[pid] = contrib

    for node in reversed(tape.nodes[: loss.nid + 1]):
        g = adj.get(node.nid)
        if g is None or node.op == "leaf":
            continue
        pids = node.parents
        if node.op == "matmul":
            a, b = tape.nodes[pids[0]], tape.nodes[pids[1]]
            acc(pids[0], g @ b.value.T)
            acc(pids[1], a.value.T @ g)
        elif node.op == "add":
            acc(pids[0], g.copy())
            acc(pids[1], g.copy())
        elif node.op == "add_bias":
            acc(pids[0], g.copy())
            acc(pids[1], g.sum(axis=0, keepdims=True))
        elif node.op == "relu":
            acc(pids[0], g * (tape.nodes[pids[0]].value > 0.0))
        elif node.op == "dropout":
            scale = node.aux
            acc(pids[0], g.copy() if scale is None else g * scale)
        elif node.op == "kernel_spmm":
            kernel: AdaptiveKernel = node.aux
            acc(pids[0], kernel.apply(g))  # S is symmetric
            if len(pids) == 2:
                h = tape.nodes[pids[0]]
                acc(pids[1], np.array([[kernel.grad_phi_dot(g, h.value)]]))
        elif node.op == "sum":
            shape = tape.nodes[pids[0]].value.shape
            acc(pids[0], np.full(shape, g[0, 0]))
        elif node.op == "masked_xent":
            mask, picked, p = node.aux
            dz = p.copy()
            dz[np.arange(mask.size), picked] -= 1.0
            dlogits = np.zeros_like(tape.nodes[pids[0]].value)
            dlogits[mask] = dz * (g[0, 0] / mask.size)
            acc(pids[0], dlogits)
        else:
            raise ContractError(f"unknown op {node.op!r} on tape")
    return adj


def finite_diff_check(
    closure: Callable[[dict[str, np.ndarray]], tuple[float, dict[str, np.ndarray]]],
    params: dict[str, np.ndarray],
    eps: float = 1e-5,
    skip: Callable[[str, tuple], bool] | None = None,
) -> tuple[float, dict[str, float]]:
    """Compare analytic gradients against central differences.

    closure(params) returns (loss, grads). Every scalar entry of every
    parameter is perturbed by +-eps; relative error is
    |analytic - numeric| / max(|numeric|, 1e-8). Returns the overall
    worst error and the per-parameter worst errors.
    """
    work = {name: arr.astype(np.float64).copy() for name, arr in params.items()}
    _, analytic = closure(work)
    per_param: dict[str, float] = {}
    for name in sorted(work):
        arr = work[name]
        worst = 0.0
        for idx in np.ndindex(arr.shape):
            if skip is not None and skip(name, idx):
                continue
            orig = arr[idx]
            arr[idx] = orig + eps
            lo_hi = closure(work)[0]
            arr[idx] = orig - eps
            lo_lo = closure(work)[0]
            arr[idx] = orig
            numeric = (lo_hi - lo_lo) / (2.0 * eps)
            rel = abs(float(analytic[name][idx]) - numeric) / max(abs(numeric), 1e-8)
            worst = max(worst, rel)
        per_param[name] = worst
    overall = max(per_param.values()) if per_param else 0.0
    return overall, per_param
