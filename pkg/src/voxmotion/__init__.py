"""Articulated vs rigid object classification from point cloud sequences.

The pipeline registers local cubic regions between frame pairs, quantizes
the recovered transforms into motion keys, and labels each pair by the
number of distinct keys. A temporal mode filter over the pair labels
yields the sequence verdict: Articulated, Rigid, or Nondeterministic.
"""

from .classifier import (
    ClassifierParams,
    FrameDecision,
    MotionKey,
    PairAnalysis,
    PairLabel,
    SequenceVerdict,
    Verdict,
    VoxelRegion,
    analyze_pair,
    classify_pair,
    classify_sequence,
    mode_filter,
    no_motion_key,
    quantize_transform,
    register_regions,
    verdict_from_labels,
    voxel_partition,
)
from .geometry import (
    RigidTransform,
    aabb_diagonal,
    fit_rigid,
    quaternion_to_rotation,
    rotation_to_quaternion,
    transform_apply,
)
from .preprocess import (
    CameraIntrinsics,
    DepthFrame,
    PreprocessParams,
    backproject,
    mean_smooth,
    preprocess_frame,
    remove_statistical_outliers,
    voxel_downsample,
)
from .registration import IcpParams, NnIndex, RegistrationResult, icp
from .synthetic import MotionSpec, PartSpec, SceneSpec, generate_sequence, render_depth

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "ClassifierParams",
    "DepthFrame",
    "FrameDecision",
    "IcpParams",
    "MotionKey",
    "MotionSpec",
    "NnIndex",
    "PairAnalysis",
    "PairLabel",
    "PartSpec",
    "PreprocessParams",
    "RegistrationResult",
    "RigidTransform",
    "SceneSpec",
    "SequenceVerdict",
    "Verdict",
    "VoxelRegion",
    "aabb_diagonal",
    "analyze_pair",
    "backproject",
    "classify_pair",
    "classify_sequence",
    "fit_rigid",
    "generate_sequence",
    "icp",
    "mean_smooth",
    "mode_filter",
    "no_motion_key",
    "preprocess_frame",
    "quantize_transform",
    "quaternion_to_rotation",
    "register_regions",
    "remove_statistical_outliers",
    "render_depth",
    "rotation_to_quaternion",
    "transform_apply",
    "verdict_from_labels",
    "voxel_downsample",
    "voxel_partition",
]
