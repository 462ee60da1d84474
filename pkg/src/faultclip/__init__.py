"""faultclip: bit-flip fault simulation for DNN weight memory and
clipped-activation hardening.

Workflow: load a model container, profile per-layer activation maxima on
calibration data, replace unbounded activations with clipped ones, tune
each clip threshold by interval search over the resilience AUC, and
evaluate accuracy-versus-fault-rate sweeps before and after.
"""

__version__ = "0.1.0"

from .data import LabeledSample, SplitSpec, load_cifar10_batch, make_split, make_synthetic_set
from .faults import FaultMask, FaultSpec, apply_mask, draw_mask
from .metrics import (
    AucResult,
    SweepConfig,
    SweepResult,
    compute_auc,
    evaluate_accuracy,
    run_sweep,
)
from .model import (
    FIXED32_Q15_16,
    FLOAT32,
    LayerSpec,
    Model,
    NumericFormat,
    ParamWords,
    decode_word,
    decode_words,
    encode_word,
    encode_words,
    forward,
    load_model,
    param_checksum,
    save_model,
    set_thresholds,
    strip_thresholds,
    with_threshold,
)
from .ops import classify, clipped_relu, conv2d_forward, fc_forward, maxpool2d_forward, relu
from .profiling import ActivationProfile, activation_histogram, profile
from .tuning import (
    SearchInterval,
    TuneConfig,
    TuneTrace,
    auc_calculation,
    interval_search_step,
    tune_layer,
    tune_network,
)

__all__ = [
    "ActivationProfile",
    "AucResult",
    "FIXED32_Q15_16",
    "FLOAT32",
    "FaultMask",
    "FaultSpec",
    "LabeledSample",
    "LayerSpec",
    "Model",
    "NumericFormat",
    "ParamWords",
    "SearchInterval",
    "SplitSpec",
    "SweepConfig",
    "SweepResult",
    "TuneConfig",
    "TuneTrace",
    "activation_histogram",
    "apply_mask",
    "auc_calculation",
    "classify",
    "clipped_relu",
    "compute_auc",
    "conv2d_forward",
    "decode_word",
    "decode_words",
    "draw_mask",
    "encode_word",
    "encode_words",
    "evaluate_accuracy",
    "fc_forward",
    "forward",
    "interval_search_step",
    "load_cifar10_batch",
    "load_model",
    "make_split",
    "make_synthetic_set",
    "maxpool2d_forward",
    "param_checksum",
    "profile",
    "relu",
    "run_sweep",
    "save_model",
    "set_thresholds",
    "strip_thresholds",
    "tune_layer",
    "tune_network",
    "with_threshold",
]
