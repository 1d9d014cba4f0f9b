"""Adaptive-kernel graph network for full-batch node classification."""

from .backend import BACKEND
from .data import Dataset, load_dataset, row_normalize, write_dataset
from .errors import (
    AkgnnError,
    ConfigError,
    ContractError,
    DataError,
    DegenerateKernelError,
    DimensionError,
    NumericError,
)
from .graph import (
    AdaptiveKernel,
    CsrGraph,
    DenseSpectrum,
    FilterWeights,
    build_graph,
    build_kernel,
    dense_kernel,
    filter_weights,
    spectrum,
    unnormalized_kernel,
)
from .model import (
    ForwardOutput,
    ModelParams,
    Variant,
    collect_grads,
    forward,
    init_params,
    lambda_trace,
    predict,
    readout,
    replace_tensors,
)
from .tape import Tape, TapeNode, backward, finite_diff_check
from .train import (
    AblationEntry,
    AdamState,
    EpochRecord,
    SweepRow,
    TrainConfig,
    TrainResult,
    adam_step,
    evaluate,
    init_adam,
    propagation_epoch_time,
    run_ablation,
    run_layer_sweep,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AblationEntry", "AdamState", "AdaptiveKernel", "AkgnnError", "BACKEND",
    "ConfigError", "ContractError", "CsrGraph", "DataError", "Dataset",
    "DegenerateKernelError", "DenseSpectrum", "DimensionError", "EpochRecord",
    "FilterWeights", "ForwardOutput", "ModelParams", "NumericError", "SweepRow",
    "Tape", "TapeNode", "TrainConfig", "TrainResult", "Variant", "adam_step",
    "backward", "build_graph", "build_kernel", "collect_grads", "dense_kernel",
    "evaluate", "filter_weights", "finite_diff_check", "forward", "init_adam",
    "init_params", "lambda_trace", "load_dataset", "predict",
    "propagation_epoch_time", "readout", "replace_tensors", "row_normalize",
    "run_ablation", "run_layer_sweep", "spectrum", "train",
    "unnormalized_kernel", "write_dataset",
]
