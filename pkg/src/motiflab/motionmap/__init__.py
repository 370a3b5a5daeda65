"""Optical flow estimation and motion heatmaps."""

from .flow import FlowField, estimate_flow, estimate_flow_video, flow_intensity, warp_backward
from .heatmap import (
    MotionHeatmap,
    binarize,
    downsample_heatmap,
    heatmap_for_video,
    motion_stats,
    normalize_intensity,
)

__all__ = [
    "FlowField", "estimate_flow", "estimate_flow_video", "flow_intensity", "warp_backward",
    "MotionHeatmap", "binarize", "downsample_heatmap", "heatmap_for_video",
    "motion_stats", "normalize_intensity",
]
