"""Depth frame to object point cloud: back-projection, denoising, resampling.

The chain is backproject -> statistical outlier removal -> voxel grid
downsampling -> mean smoothing. Sizes marked AUTO are derived from the
bounding-box diagonal of the cloud after outlier removal: the downsample
edge is diagonal / 20 and the smoothing radius 5x that edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import FrameSkipped, TooFewPoints
from .geometry import aabb_diagonal, as_points


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass
class DepthFrame:
    """Depth map in metres (0 = invalid) with a binary object mask."""

    depth: np.ndarray
    mask: np.ndarray
    intrinsics: CameraIntrinsics
    frame_index: int = 0

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.mask = np.asarray(self.mask).astype(bool)
        if self.depth.ndim != 2 or self.depth.shape != self.mask.shape:
            raise ValueError(
                f"depth {self.depth.shape} and mask {self.mask.shape} must be equal 2-D grids"
            )
        if not np.isfinite(self.depth).all() or (self.depth < 0).any():
            raise ValueError("depth values must be finite and non-negative")


@dataclass(frozen=True)
class PreprocessParams:
    """Cloud cleanup settings. ``None`` sizes are resolved per cloud (AUTO)."""

    outlier_std_ratio: float = 0.5
    neighbor_fraction: float = 0.1
    max_neighbors: int = 200
    voxel_size: float | None = None
    smooth_radius: float | None = None

    def __post_init__(self):
        if self.outlier_std_ratio <= 0:
            raise ValueError("outlier_std_ratio must be positive")
        if not 0 < self.neighbor_fraction <= 1:
            raise ValueError("neighbor_fraction must be in (0, 1]")
        if self.voxel_size is not None and self.voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        if self.smooth_radius is not None and self.smooth_radius <= 0:
            raise ValueError("smooth_radius must be positive")


def backproject(frame: DepthFrame) -> np.ndarray:
    """Lift masked valid-depth pixels to 3D camera coordinates.

    Points are emitted in row-major pixel order. An empty mask yields an
    empty cloud.
    """
    rows, cols = np.nonzero(frame.mask & (frame.depth > 0))
    z = frame.depth[rows, cols]
    k = frame.intrinsics
    x = (cols - k.cx) * z / k.fx
    y = (rows - k.cy) * z / k.fy
    return np.column_stack([x, y, z])


def remove_statistical_outliers(
    cloud,
    std_ratio: float = 0.5,
    neighbor_fraction: float = 0.1,
    max_neighbors: int = 200,
) -> np.ndarray:
    """Drop points whose mean k-NN distance exceeds mean + std_ratio * std.

    k is ``floor(neighbor_fraction * N)`` clamped to [1, max_neighbors]; the
    cap keeps the filter tractable on large clouds without changing the
    statistic where it matters. Input order is preserved.
    """
    pts = as_points(cloud)
    n = len(pts)
    if n == 0:
        raise TooFewPoints("outlier removal needs a non-empty cloud")
    k = min(max_neighbors, max(1, math.floor(neighbor_fraction * n)))
    if n <= k:
        raise TooFewPoints(f"cloud of {n} points cannot support k={k} neighbors")

    tree = cKDTree(pts)
    dists, _ = tree.query(pts, k=k + 1)  # first column is the point itself
    mean_dist = dists[:, 1:].mean(axis=1)
    threshold = mean_dist.mean() + std_ratio * mean_dist.std()
    return pts[mean_dist <= threshold]


def voxel_downsample(cloud, edge: float) -> np.ndarray:
    """Replace the points of each occupied grid cube by their centroid.

    The grid is anchored at the cloud's AABB min corner. Output rows are
    ordered by ascending lexicographic (ix, iy, iz) cell index.
    """
    if edge <= 0:
        raise ValueError("voxel edge must be positive")
    pts = as_points(cloud)
    if len(pts) == 0:
        return pts
    origin = pts.min(axis=0)
    cells = np.floor((pts - origin) / edge).astype(np.int64)
    unique_cells, inverse = np.unique(cells, axis=0, return_inverse=True)
    sums = np.zeros((len(unique_cells), 3))
    np.add.at(sums, inverse, pts)
    counts = np.bincount(inverse, minlength=len(unique_cells))
    return sums / counts[:, None]


def mean_smooth(cloud, radius: float) -> np.ndarray:
    """Move each point to the centroid of all points within ``radius`` of it.

    The point itself always belongs to its own neighborhood, so cardinality
    and order are preserved and isolated points stay put.
    """
    if radius <= 0:
        raise ValueError("smoothing radius must be positive")
    pts = as_points(cloud)
    if len(pts) == 0:
        return pts
    tree = cKDTree(pts)
    neighborhoods = tree.query_ball_point(pts, radius)
    lengths = np.fromiter((len(nb) for nb in neighborhoods), dtype=np.int64, count=len(pts))
    flat = np.concatenate([np.asarray(nb, dtype=np.int64) for nb in neighborhoods])
    owners = np.repeat(np.arange(len(pts)), lengths)
    sums = np.zeros_like(pts)
    np.add.at(sums, owners, pts[flat])
    return sums / lengths[:, None]


def preprocess_frame(frame: DepthFrame, params: PreprocessParams = PreprocessParams()) -> np.ndarray:
    """Full cleanup chain for one depth frame.

    Raises FrameSkipped when the mask selects no valid depth pixels, which
    callers treat as "drop this frame and move on".
    """
    if not frame.mask.any():
        raise FrameSkipped(f"frame {frame.frame_index}: empty mask")
    cloud = backproject(frame)
    if len(cloud) == 0:
        raise FrameSkipped(f"frame {frame.frame_index}: mask covers no valid depth")

    cloud = remove_statistical_outliers(
        cloud,
        std_ratio=params.outlier_std_ratio,
        neighbor_fraction=params.neighbor_fraction,
        max_neighbors=params.max_neighbors,
    )
    voxel = params.voxel_size if params.voxel_size is not None else aabb_diagonal(cloud) / 20.0
    if voxel > 0:
        cloud = voxel_downsample(cloud, voxel)
        radius = params.smooth_radius if params.smooth_radius is not None else 5.0 * voxel
        cloud = mean_smooth(cloud, radius)
    elif params.smooth_radius is not None:
        cloud = mean_smooth(cloud, params.smooth_radius)
    return cloud
