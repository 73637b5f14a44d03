"""Blind-time 3D object detection: LiDAR + image proposals + event streams."""

from ._core import (
    Box3D,
    apply_motion,
    box_corners,
    build_event_voxel_grid,
    combine_score,
    default_config_json,
    iou_3d,
    iou_bev,
    iou_target,
    pose_interpolate,
    run_eval,
    run_infer,
    run_synth,
    run_train,
    slerp,
    wrap_angle,
)

__all__ = [
    "Box3D",
    "apply_motion",
    "box_corners",
    "build_event_voxel_grid",
    "combine_score",
    "default_config_json",
    "iou_3d",
    "iou_bev",
    "iou_target",
    "pose_interpolate",
    "run_eval",
    "run_infer",
    "run_synth",
    "run_train",
    "slerp",
    "wrap_angle",
]

__version__ = "0.1.0"
