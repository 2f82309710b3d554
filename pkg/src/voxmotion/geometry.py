"""Core 3D types and closed-form rigid alignment.

Point clouds are (N, 3) float64 arrays in metres; row order is meaningful
and preserved by every operation. Rotations are unit quaternions in
(w, x, y, z) order with a canonical sign: w >= 0, and if w == 0 the first
nonzero vector component is positive. The canonical form matters because
q and -q encode the same rotation and must never produce distinct hash
keys downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCorrespondences, EmptyCloud, NotARotation

_IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def as_points(points) -> np.ndarray:
    """Coerce array-like input to an (N, 3) float64 cloud, validating finiteness."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 3)
    if pts.ndim == 1 and pts.shape[0] == 3:
        pts = pts.reshape(1, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected points of shape (N, 3), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError("point coordinates must be finite")
    return pts


def canonical_quaternion(q) -> np.ndarray:
    """Normalize a quaternion and fix its sign to the canonical representative."""
    q = np.asarray(q, dtype=np.float64).reshape(4)
    norm = math.sqrt(float(q @ q))
    if not math.isfinite(norm) or abs(norm - 1.0) > 1e-6:
        raise ValueError(f"quaternion norm {norm} too far from 1")
    q = q / norm
    if q[0] < 0.0:
        q = -q
    elif q[0] == 0.0:
        for c in q[1:]:
            if c != 0.0:
                if c < 0.0:
                    q = -q
                break
    return q


def quaternion_to_rotation(q) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to a 3x3 rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=np.float64).reshape(4)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotation_to_quaternion(matrix) -> np.ndarray:
    """3x3 rotation matrix to the canonical unit quaternion (w, x, y, z).

    Raises NotARotation unless the input is orthonormal with det = +1
    within 1e-6. Uses the max-trace branch selection for numerical
    stability near 180 degree rotations.
    """
    r = np.asarray(matrix, dtype=np.float64)
    if r.shape != (3, 3):
        raise NotARotation(f"expected a 3x3 matrix, got shape {r.shape}")
    if not np.isfinite(r).all():
        raise NotARotation("matrix has non-finite entries")
    if np.abs(r.T @ r - np.eye(3)).max() > 1e-6:
        raise NotARotation("matrix is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > 1e-6:
        raise NotARotation("matrix determinant is not +1")

    trace = r[0, 0] + r[1, 1] + r[2, 2]
    if trace > 0.0:
        s = 2.0 * math.sqrt(trace + 1.0)
        q = (0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s)
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = ((r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s)
    elif r[1, 1] > r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = ((r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = ((r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s)
    return canonical_quaternion(q)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """SE(3) element stored as canonical unit quaternion plus translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", canonical_quaternion(self.rotation))
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.isfinite(t).all():
            raise ValueError("translation must be finite")
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(_IDENTITY_QUAT, np.zeros(3))

    @classmethod
    def from_rotation_matrix(cls, matrix, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(rotation_to_quaternion(matrix), translation)

    @classmethod
    def from_axis_angle(cls, axis, radians, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        axis = np.asarray(axis, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise ValueError("rotation axis must be nonzero")
        axis = axis / norm
        half = 0.5 * radians
        q = np.concatenate(([math.cos(half)], math.sin(half) * axis))
        return cls(q, translation)

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quaternion_to_rotation(self.rotation)

    @property
    def angle(self) -> float:
        """Rotation angle in radians, in [0, pi] thanks to the canonical sign."""
        w = self.rotation[0]
        vec = np.linalg.norm(self.rotation[1:])
        return 2.0 * math.atan2(vec, w)

    def apply(self, points) -> np.ndarray:
        pts = as_points(points)
        return pts @ self.rotation_matrix.T + self.translation

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        """Composition: (a @ b).apply(p) == a.apply(b.apply(p))."""
        w1, x1, y1, z1 = self.rotation
        w2, x2, y2, z2 = other.rotation
        q = (
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )
        t = self.rotation_matrix @ other.translation + self.translation
        return RigidTransform(q, t)

    def inverse(self) -> "RigidTransform":
        conj = self.rotation * np.array([1.0, -1.0, -1.0, -1.0])
        return RigidTransform(conj, -(self.rotation_matrix.T @ self.translation))


def transform_apply(cloud, transform: RigidTransform) -> np.ndarray:
    """Rotate then translate every point; cardinality and order preserved."""
    return transform.apply(cloud)


def fit_rigid(source, target) -> RigidTransform:
    """Least-squares rigid transform mapping paired source points onto target.

    Solves min_T sum ||T(source_i) - target_i||^2 by centroid subtraction
    and SVD of the 3x3 cross-covariance, flipping the sign of the smallest
    singular vector when needed so the result is always a proper rotation.
    """
    src = as_points(source)
    dst = as_points(target)
    if src.shape != dst.shape:
        raise ValueError(f"paired clouds must match: {src.shape} vs {dst.shape}")
    if len(src) < 3:
        raise DegenerateCorrespondences(f"need at least 3 pairs, got {len(src)}")

    centroid_src = src.mean(axis=0)
    centroid_dst = dst.mean(axis=0)
    h = (src - centroid_src).T @ (dst - centroid_dst)
    u, s, vt = np.linalg.svd(h)
    # Rank < 2 means the pairs are collinear or coincident and the rotation
    # about the residual axis is unconstrained.
    if s[1] <= s[0] * 1e-9:
        raise DegenerateCorrespondences("correspondences are collinear or coincident")

    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = centroid_dst - rot @ centroid_src
    return RigidTransform(rotation_to_quaternion(rot), t)


def aabb_bounds(cloud) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise (min, max) corners of the axis-aligned bounding box."""
    pts = as_points(cloud)
    if len(pts) == 0:
        raise EmptyCloud("bounding box of an empty cloud")
    return pts.min(axis=0), pts.max(axis=0)


def aabb_diagonal(cloud) -> float:
    """Diagonal length of the axis-aligned bounding box, in metres."""
    lo, hi = aabb_bounds(cloud)
    return float(np.linalg.norm(hi - lo))
