"""Python bindings for the Samba saliency kernels."""

from ._core import (
    cau_interleave,
    cau_pairing,
    evaluate,
    object_prior,
    path_divergence,
    randomized_quantization,
    reverse_attention,
    schedule_plan,
    sns_order,
    sns_path_bundle,
    soft_morph_edge,
    ssm_backward,
    ssm_parallel_scan,
    ssm_recurrence,
)

__all__ = [
    "cau_interleave",
    "cau_pairing",
    "evaluate",
    "object_prior",
    "path_divergence",
    "randomized_quantization",
    "reverse_attention",
    "schedule_plan",
    "sns_order",
    "sns_path_bundle",
    "soft_morph_edge",
    "ssm_backward",
    "ssm_parallel_scan",
    "ssm_recurrence",
]
