"""Adaptive-kernel GNN: parameters, ablation variants, forward graph.

The full model transforms features once (H0 = relu(dropout(X) @ W*)),
then propagates K times with per-layer adaptive kernels,
H^(k) = S_k @ dropout(H^(k-1)), sums the K propagated states, and maps
the sum through an affine head to class logits. Ablations switch off
the learnable lam_max (kernels stay at their init), the shared input
transform (replaced by per-layer weights inside the propagation), or
the sum readout (last state only).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, ContractError, DimensionError
from .graph import CsrGraph, build_kernel
from .tape import Tape, TapeNode

K_PHI_INIT = 1.0  # lam_max starts at 2: balanced low/all-pass mix


class Variant(str, Enum):
    FULL = "full"
    NO_LAMBDA = "no-lambda"
    NO_PT = "no-pt"
    NO_READOUT = "no-readout"

    @property
    def learns_phi(self) -> bool:
        return self is not Variant.NO_LAMBDA

    @property
    def shares_input_transform(self) -> bool:
        return self is not Variant.NO_PT

    @property
    def sums_states(self) -> bool:
        return self is not Variant.NO_READOUT


@dataclass
class ModelParams:
    variant: Variant
    num_features: int
    hidden: int
    num_classes: int
    layers: int
    phi: np.ndarray              # (K,)
    w_star: np.ndarray | None    # (d, h), absent for no-pt
    layer_w: list[np.ndarray]    # no-pt only: (d, h) then (h, h)
    head_w: list[np.ndarray]     # affine head, last maps to classes
    head_b: list[np.ndarray]     # (1, width) rows

    def flat(self) -> dict[str, np.ndarray]:
        """Name -> array view of every trainable tensor (shared refs)."""
        out: dict[str, np.ndarray] = {"phi": self.phi}
        if self.w_star is not None:
            out["w_star"] = self.w_star
        for i, w in enumerate(self.layer_w):
            out[f"layer_w_{i}"] = w
        for i, w in enumerate(self.head_w):
            out[f"head_w_{i}"] = w
        for i, b in enumerate(self.head_b):
            out[f"head_b_{i}"] = b
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.variant, self.num_features, self.hidden, self.num_classes,
            self.layers, self.phi.copy(),
            None if self.w_star is None else self.w_star.copy(),
            [w.copy() for w in self.layer_w],
            [w.copy() for w in self.head_w],
            [b.copy() for b in self.head_b],
        )


def replace_tensors(params: ModelParams, flat: dict[str, np.ndarray]) -> ModelParams:
    """New ModelParams wired to the arrays in flat (same naming as flat())."""
    out = params.copy()
    out.phi = flat["phi"]
    if out.w_star is not None:
        out.w_star = flat["w_star"]
    out.layer_w = [flat[f"layer_w_{i}"] for i in range(len(out.layer_w))]
    out.head_w = [flat[f"head_w_{i}"] for i in range(len(out.head_w))]
    out.head_b = [flat[f"head_b_{i}"] for i in range(len(out.head_b))]
    return out


def is_decayed(name: str) -> bool:
    """Weight decay hits matrix weights only, never phi or biases."""
    return name.startswith(("w_star", "layer_w_", "head_w_"))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    std = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=(fan_in, fan_out))


def init_params(num_features: int, hidden: int, num_classes: int, layers: int,
                variant: Variant, rng: np.random.Generator,
                head_depth: int = 1) -> ModelParams:
    """Glorot-normal weights, zero biases, phi at K_PHI_INIT exactly.

    Draw order is fixed (input transform, per-layer weights, head), so
    a given rng state always produces the same parameters.
    """
    if num_features < 1 or hidden < 1:
        raise ConfigError("num_features and hidden must be >= 1")
    if num_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {num_classes}")
    if layers < 1:
        raise ConfigError(f"need at least 1 propagation layer, got {layers}")
    if head_depth < 1:
        raise ConfigError(f"head_depth must be >= 1, got {head_depth}")

    variant = Variant(variant)
    phi = np.full(layers, K_PHI_INIT, dtype=np.float64)
    w_star = None
    layer_w: list[np.ndarray] = []
    if variant.shares_input_transform:
        w_star = _glorot(rng, num_features, hidden)
    else:
        widths = [num_features] + [hidden] * layers
        layer_w = [_glorot(rng, widths[i], widths[i + 1]) for i in range(layers)]
    head_w: list[np.ndarray] = []
    head_b: list[np.ndarray] = []
    for i in range(head_depth):
        w_out = num_classes if i == head_depth - 1 else hidden
        head_w.append(_glorot(rng, hidden, w_out))
        head_b.append(np.zeros((1, w_out)))
    return ModelParams(variant, num_features, hidden, num_classes, layers,
                       phi, w_star, layer_w, head_w, head_b)


def readout(tape: Tape, states: list[TapeNode]) -> TapeNode:
    """Element-wise sum of the propagated states."""
    if not states:
        raise ContractError("readout needs at least one state")
    acc = states[0]
    for node in states[1:]:
        acc = tape.add(acc, node)
    return acc


@dataclass
class ForwardOutput:
    tape: Tape
    logits: TapeNode
    hidden: list[TapeNode]          # propagated states H^(1..K)
    readout: TapeNode               # pre-head representation
    loss: TapeNode | None
    param_nodes: dict[str, TapeNode]


def forward(params: ModelParams, graph: CsrGraph, x: np.ndarray, *,
            mode: str = "eval", dropout_rate: float = 0.0,
            rng: np.random.Generator | None = None,
            labels: np.ndarray | None = None,
            loss_mask: np.ndarray | None = None) -> ForwardOutput:
    """Record one forward pass on a fresh tape.

    Kernels are rebuilt from the current phi on every call, so parameter
    updates between calls take effect immediately. Eval mode draws
    nothing from rng and is fully deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != graph.num_nodes:
        raise DimensionError(
            f"features have {x.shape[0]} rows but graph has {graph.num_nodes} nodes"
        )
    if x.shape[1] != params.num_features:
        raise DimensionError(
            f"features have {x.shape[1]} columns but model expects "
            f"{params.num_features}"
        )
    if (labels is None) != (loss_mask is None):
        raise ContractError("labels and loss_mask must be given together")

    variant = params.variant
    tape = Tape()
    pn: dict[str, TapeNode] = {}
    x_node = tape.leaf(x)
    phi_nodes = []
    for k in range(params.layers):
        node = tape.leaf([[params.phi[k]]])
        phi_nodes.append(node)
        pn[f"phi_{k}"] = node

    kernels = [build_kernel(graph, float(params.phi[k])) for k in range(params.layers)]

    hidden: list[TapeNode] = []
    if variant.shares_input_transform:
        w_star = tape.leaf(params.w_star)
        pn["w_star"] = w_star
        h = tape.relu(tape.matmul(tape.dropout(x_node, dropout_rate, mode, rng), w_star))
        for k in range(params.layers):
            dropped = tape.dropout(h, dropout_rate, mode, rng)
            h = tape.kernel_spmm(kernels[k], dropped,
                                 phi_nodes[k] if variant.learns_phi else None)
            hidden.append(h)
    else:
        h = x_node
        for k in range(params.layers):
            w_k = tape.leaf(params.layer_w[k])
            pn[f"layer_w_{k}"] = w_k
            pre = tape.matmul(tape.dropout(h, dropout_rate, mode, rng), w_k)
            h = tape.relu(tape.kernel_spmm(kernels[k], pre,
                                           phi_nodes[k] if variant.learns_phi else None))
            hidden.append(h)

    rep = readout(tape, hidden) if variant.sums_states else hidden[-1]
    z = tape.dropout(rep, dropout_rate, mode, rng)
    for i in range(len(params.head_w)):
        w = tape.leaf(params.head_w[i])
        b = tape.leaf(params.head_b[i])
        pn[f"head_w_{i}"] = w
        pn[f"head_b_{i}"] = b
        z = tape.add_bias(tape.matmul(z, w), b)
        if i < len(params.head_w) - 1:
            z = tape.relu(z)

    loss = None
    if labels is not None:
        loss = tape.masked_softmax_xent(z, labels, loss_mask)
    return ForwardOutput(tape, z, hidden, rep, loss, pn)


def collect_grads(params: ModelParams, out: ForwardOutput,
                  adj: dict[int, np.ndarray]) -> dict[str, np.ndarray]:
    """Assemble the adjoint map into arrays matching params.flat()."""
    grads: dict[str, np.ndarray] = {}
    for name, arr in params.flat().items():
        if name == "phi":
            g = np.zeros(params.layers)
            for k in range(params.layers):
                node = out.param_nodes[f"phi_{k}"]
                got = adj.get(node.nid)
                g[k] = got[0, 0] if got is not None else 0.0
            grads[name] = g
        else:
            got = adj.get(out.param_nodes[name].nid)
            grads[name] = got if got is not None else np.zeros_like(arr)
    return grads


def lambda_trace(params: ModelParams) -> np.ndarray:
    """Current lam_max per layer: 1 + relu(phi_k)."""
    return 1.0 + np.maximum(params.phi, 0.0)


def predict(logits: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class id."""
    return np.argmax(logits, axis=1)
