"""Seed-refinement pipeline for weak-label segmentation.

Thin wrapper around the C++ core: correlation-based CAM refinement,
pixel-adaptive propagation, certainty filtering, edge-superpixel relabeling,
foreground mixing, and segmentation metrics.
"""

from ._core import (
    ConfusionTally,
    PipelineConfig,
    canny,
    certain_filter,
    connected_components,
    ep_refine,
    first_order_sc,
    foreground_union,
    hsc,
    local_sigma,
    loss_cls,
    loss_rec,
    loss_seg,
    minmax_normalize,
    mix_partners,
    pamr_refine,
    recurseed_step,
    scg_refine,
    second_order_sc,
    softmax_map,
)

__all__ = [
    "ConfusionTally",
    "PipelineConfig",
    "canny",
    "certain_filter",
    "connected_components",
    "ep_refine",
    "first_order_sc",
    "foreground_union",
    "hsc",
    "local_sigma",
    "loss_cls",
    "loss_rec",
    "loss_seg",
    "minmax_normalize",
    "mix_partners",
    "pamr_refine",
    "recurseed_step",
    "scg_refine",
    "second_order_sc",
    "softmax_map",
]

__version__ = "0.1.0"
