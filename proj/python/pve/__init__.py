"""Python bindings for the pve detection engine."""

from ._pve import (
    Error,
    Model,
    compute_metrics,
    decode_image,
    explain,
    init_output_bias,
    percentile_nearest_rank,
    predict,
    preprocess,
    saliency,
    sigmoid,
    stratified_split,
    write_synthetic_corpus,
)

__all__ = [
    "Error",
    "Model",
    "compute_metrics",
    "decode_image",
    "explain",
    "init_output_bias",
    "percentile_nearest_rank",
    "predict",
    "preprocess",
    "saliency",
    "sigmoid",
    "stratified_split",
    "write_synthetic_corpus",
]
