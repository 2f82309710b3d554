"""Seeded synthetic scenes with exact per-frame ground truth.

Each scene is a set of surface-sampled parts (boxes, cylinders, flat
panels), each driven by a closed-form motion: static, free rigid motion,
rotation about a fixed axis, or translation along a fixed direction.
Frames are the concatenated transformed part samples plus isotropic
Gaussian noise, and the exact per-part transforms are returned alongside
so tests can check recovered motions against the truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec, PointBehindCamera
from .geometry import RigidTransform, as_points
from .preprocess import CameraIntrinsics, DepthFrame

_SHAPES = ("box", "cylinder", "panel")
_MOTIONS = ("static", "rigid", "revolute", "prismatic")


def _unit(vec, what: str) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise InvalidSpec(f"{what} must be a nonzero finite vector")
    return v / norm


@dataclass(frozen=True)
class PartSpec:
    """One rigid part: a surface-sampled primitive with a placement pose.

    ``size`` is (lx, ly, lz) for a box, (radius, height) for a cylinder and
    (width, height) for a flat panel in its local xy plane. ``relief``
    embosses a smooth deterministic height field of the given amplitude
    (metres) onto flat faces; real objects are never ideal planes, and the
    relief is what lets local registration lock in-plane instead of sliding.
    """

    shape: str
    size: tuple[float, ...]
    samples: int = 400
    pose: RigidTransform = field(default_factory=RigidTransform.identity)
    relief: float = 0.0
    relief_wavelength: float = 0.05

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise InvalidSpec(f"unknown shape {self.shape!r}, expected one of {_SHAPES}")
        expected = {"box": 3, "cylinder": 2, "panel": 2}[self.shape]
        if len(self.size) != expected or any(s <= 0 for s in self.size):
            raise InvalidSpec(f"{self.shape} needs {expected} positive dimensions, got {self.size}")
        if self.samples < 50:
            raise InvalidSpec("each part needs at least 50 surface samples")
        if self.relief < 0 or self.relief_wavelength <= 0:
            raise InvalidSpec("relief must be >= 0 with a positive wavelength")


@dataclass(frozen=True)
class MotionSpec:
    """Closed-form motion of one part; the transform at frame f is exact.

    ``rate_amplitude``/``rate_period`` add a sinusoidal modulation to the
    rotation angle so consecutive frame pairs do not repeat the identical
    relative motion, the way a hand-driven interaction would not.
    """

    kind: str = "static"
    axis_point: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis_dir: tuple[float, float, float] = (0.0, 0.0, 1.0)
    radians_per_frame: float = 0.0
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    metres_per_frame: float = 0.0
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rate_amplitude: float = 0.0
    rate_period: float = 20.0
    axis_drift_dir: tuple[float, float, float] = (0.0, 0.0, 1.0)
    axis_drift_radians_per_frame: float = 0.0

    def __post_init__(self):
        if self.kind not in _MOTIONS:
            raise InvalidSpec(f"unknown motion {self.kind!r}, expected one of {_MOTIONS}")
        if self.kind in ("rigid", "revolute"):
            object.__setattr__(self, "axis_dir", tuple(_unit(self.axis_dir, "axis_dir")))
        if self.axis_drift_radians_per_frame:
            object.__setattr__(
                self, "axis_drift_dir", tuple(_unit(self.axis_drift_dir, "axis_drift_dir"))
            )
        if self.kind == "prismatic":
            object.__setattr__(self, "direction", tuple(_unit(self.direction, "direction")))
        if self.rate_period <= 0:
            raise InvalidSpec("rate_period must be positive")

    def _angle(self, frame: int) -> float:
        theta = self.radians_per_frame * frame
        if self.rate_amplitude:
            theta += self.rate_amplitude * math.sin(2.0 * math.pi * frame / self.rate_period)
        return theta

    def _axis(self, frame: int) -> np.ndarray:
        axis = np.asarray(self.axis_dir, dtype=np.float64)
        if self.axis_drift_radians_per_frame:
            drift = RigidTransform.from_axis_angle(
                self.axis_drift_dir, self.axis_drift_radians_per_frame * frame
            )
            axis = drift.rotation_matrix @ axis
        return axis

    def transform_at(self, frame: int) -> RigidTransform:
        if self.kind == "static":
            return RigidTransform.identity()
        if self.kind == "prismatic":
            offset = self.metres_per_frame * frame * np.asarray(self.direction)
            return RigidTransform(np.array([1.0, 0.0, 0.0, 0.0]), offset)
        rotation = RigidTransform.from_axis_angle(self._axis(frame), self._angle(frame))
        pivot = np.asarray(self.axis_point, dtype=np.float64)
        translation = pivot - rotation.rotation_matrix @ pivot
        if self.kind == "rigid":
            translation = translation + frame * np.asarray(self.velocity, dtype=np.float64)
        return RigidTransform(rotation.rotation, translation)


@dataclass(frozen=True)
class SceneSpec:
    """Parts with one motion each, a frame count, noise level and seed."""

    parts: tuple[PartSpec, ...]
    motions: tuple[MotionSpec, ...]
    frame_count: int
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "motions", tuple(self.motions))
        if not self.parts:
            raise InvalidSpec("scene needs at least one part")
        if len(self.parts) != len(self.motions):
            raise InvalidSpec(
                f"{len(self.parts)} parts but {len(self.motions)} motions; need one motion per part"
            )
        if self.frame_count < 2:
            raise InvalidSpec("frame_count must be >= 2")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")


def _allocate(total: int, weights: list[float]) -> list[int]:
    """Largest-remainder split of ``total`` proportional to ``weights``."""
    scale = total / sum(weights)
    raw = [w * scale for w in weights]
    counts = [math.floor(r) for r in raw]
    remainders = sorted(range(len(raw)), key=lambda i: (raw[i] - counts[i], i), reverse=True)
    for i in remainders[: total - sum(counts)]:
        counts[i] += 1
    return counts


def _emboss(height: float, wavelength: float, u: np.ndarray, v: np.ndarray, phase: float) -> np.ndarray:
    k = 2.0 * math.pi / wavelength
    return height * np.sin(k * u + phase) * np.sin(k * v + 2.0 * phase + 1.0)


def _sample_box(size, n: int, rng: np.random.Generator,
                relief: float = 0.0, wavelength: float = 0.05) -> np.ndarray:
    lx, ly, lz = size
    faces = [  # (fixed axis, sign, area)
        (0, +1, ly * lz), (0, -1, ly * lz),
        (1, +1, lx * lz), (1, -1, lx * lz),
        (2, +1, lx * ly), (2, -1, lx * ly),
    ]
    half = np.array([lx, ly, lz]) / 2.0
    pts = []
    for face_index, ((axis, sign, _), count) in enumerate(
        zip(faces, _allocate(n, [f[2] for f in faces]))
    ):
        if count == 0:
            continue
        p = rng.uniform(-half, half, size=(count, 3))
        p[:, axis] = sign * half[axis]
        if relief:
            u_axis, v_axis = [a for a in range(3) if a != axis]
            p[:, axis] += sign * _emboss(
                relief, wavelength, p[:, u_axis], p[:, v_axis], 0.7 * face_index
            )
        pts.append(p)
    return np.vstack(pts)


def _sample_cylinder(size, n: int, rng: np.random.Generator) -> np.ndarray:
    radius, height = size
    lateral = 2.0 * math.pi * radius * height
    cap = math.pi * radius * radius
    n_side, n_top, n_bottom = _allocate(n, [lateral, cap, cap])
    pts = []
    if n_side:
        theta = rng.uniform(0.0, 2.0 * math.pi, n_side)
        z = rng.uniform(-height / 2.0, height / 2.0, n_side)
        pts.append(np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z]))
    for count, z in ((n_top, height / 2.0), (n_bottom, -height / 2.0)):
        if count:
            r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
            theta = rng.uniform(0.0, 2.0 * math.pi, count)
            pts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta), np.full(count, z)]))
    return np.vstack(pts)


def _sample_panel(size, n: int, rng: np.random.Generator,
                  relief: float = 0.0, wavelength: float = 0.05) -> np.ndarray:
    width, height = size
    xy = rng.uniform([-width / 2.0, -height / 2.0], [width / 2.0, height / 2.0], size=(n, 2))
    z = _emboss(relief, wavelength, xy[:, 0], xy[:, 1], 0.3) if relief else np.zeros(n)
    return np.column_stack([xy, z])


def sample_part(part: PartSpec, rng: np.random.Generator) -> np.ndarray:
    """Surface samples of one part in scene coordinates (pose applied)."""
    if part.shape == "box":
        local = _sample_box(part.size, part.samples, rng, part.relief, part.relief_wavelength)
    elif part.shape == "panel":
        local = _sample_panel(part.size, part.samples, rng, part.relief, part.relief_wavelength)
    else:
        local = _sample_cylinder(part.size, part.samples, rng)
    return part.pose.apply(local)


def generate_sequence(spec: SceneSpec) -> tuple[list[np.ndarray], list[list[RigidTransform]]]:
    """Frames and exact per-frame per-part transforms for one scene.

    Frame f concatenates every part's base samples mapped through that
    part's transform at f, plus fresh Gaussian noise. Noise streams are
    keyed on (seed, frame) so frames may be generated in any order and
    still come out identical.
    """
    base_rng = np.random.default_rng(spec.seed)
    base = [sample_part(part, base_rng) for part in spec.parts]

    frames: list[np.ndarray] = []
    truth: list[list[RigidTransform]] = []
    for f in range(spec.frame_count):
        per_part = [motion.transform_at(f) for motion in spec.motions]
        cloud = np.vstack([t.apply(pts) for t, pts in zip(per_part, base)])
        if spec.noise_sigma > 0:
            noise_rng = np.random.default_rng([spec.seed, 7919, f])
            cloud = cloud + noise_rng.normal(0.0, spec.noise_sigma, cloud.shape)
        frames.append(cloud)
        truth.append(per_part)
    return frames, truth


def render_depth(
    cloud,
    intrinsics: CameraIntrinsics,
    shape: tuple[int, int],
    frame_index: int = 0,
) -> DepthFrame:
    """Z-buffer projection of a cloud into a depth frame.

    Each point lands on its rounded pixel; the nearest depth wins per pixel
    and the mask marks occupied pixels. Points projecting outside the image
    are dropped; any point with non-positive depth is an error.
    """
    pts = as_points(cloud)
    if len(pts) == 0:
        raise PointBehindCamera("cannot render an empty cloud")
    z = pts[:, 2]
    if (z <= 0).any():
        raise PointBehindCamera("all points must have positive depth")
    height, width = shape
    u = np.rint(intrinsics.fx * pts[:, 0] / z + intrinsics.cx).astype(np.int64)
    v = np.rint(intrinsics.fy * pts[:, 1] / z + intrinsics.cy).astype(np.int64)
    inside = (u >= 0) & (u < width) & (v >= 0) & (v < height)

    buffer = np.full((height, width), np.inf)
    np.minimum.at(buffer, (v[inside], u[inside]), z[inside])
    mask = np.isfinite(buffer)
    depth = np.where(mask, buffer, 0.0)
    return DepthFrame(depth=depth, mask=mask, intrinsics=intrinsics, frame_index=frame_index)


# --- serialization (human-readable scene documents) ------------------------


def _transform_to_dict(t: RigidTransform) -> dict:
    return {"rotation_wxyz": [float(c) for c in t.rotation],
            "translation": [float(c) for c in t.translation]}


def _transform_from_dict(data: dict) -> RigidTransform:
    return RigidTransform(data.get("rotation_wxyz", [1.0, 0.0, 0.0, 0.0]),
                          data.get("translation", [0.0, 0.0, 0.0]))


def scene_to_dict(spec: SceneSpec) -> dict:
    return {
        "seed": spec.seed,
        "frame_count": spec.frame_count,
        "noise_sigma": spec.noise_sigma,
        "parts": [
            {
                "shape": part.shape,
                "size": list(part.size),
                "samples": part.samples,
                "relief": part.relief,
                "relief_wavelength": part.relief_wavelength,
                "pose": _transform_to_dict(part.pose),
                "motion": {
                    "kind": motion.kind,
                    "axis_point": list(motion.axis_point),
                    "axis_dir": list(motion.axis_dir),
                    "radians_per_frame": motion.radians_per_frame,
                    "direction": list(motion.direction),
                    "metres_per_frame": motion.metres_per_frame,
                    "velocity": list(motion.velocity),
                    "rate_amplitude": motion.rate_amplitude,
                    "rate_period": motion.rate_period,
                    "axis_drift_dir": list(motion.axis_drift_dir),
                    "axis_drift_radians_per_frame": motion.axis_drift_radians_per_frame,
                },
            }
            for part, motion in zip(spec.parts, spec.motions)
        ],
    }


def scene_from_dict(data: dict) -> SceneSpec:
    try:
        parts = []
        motions = []
        for entry in data["parts"]:
            motion_data = entry.get("motion", {})
            parts.append(
                PartSpec(
                    shape=entry["shape"],
                    size=tuple(entry["size"]),
                    samples=int(entry.get("samples", 400)),
                    pose=_transform_from_dict(entry.get("pose", {})),
                    relief=float(entry.get("relief", 0.0)),
                    relief_wavelength=float(entry.get("relief_wavelength", 0.05)),
                )
            )
            motions.append(
                MotionSpec(
                    kind=motion_data.get("kind", "static"),
                    axis_point=tuple(motion_data.get("axis_point", (0.0, 0.0, 0.0))),
                    axis_dir=tuple(motion_data.get("axis_dir", (0.0, 0.0, 1.0))),
                    radians_per_frame=float(motion_data.get("radians_per_frame", 0.0)),
                    direction=tuple(motion_data.get("direction", (1.0, 0.0, 0.0))),
                    metres_per_frame=float(motion_data.get("metres_per_frame", 0.0)),
                    velocity=tuple(motion_data.get("velocity", (0.0, 0.0, 0.0))),
                    rate_amplitude=float(motion_data.get("rate_amplitude", 0.0)),
                    rate_period=float(motion_data.get("rate_period", 20.0)),
                    axis_drift_dir=tuple(motion_data.get("axis_drift_dir", (0.0, 0.0, 1.0))),
                    axis_drift_radians_per_frame=float(
                        motion_data.get("axis_drift_radians_per_frame", 0.0)
                    ),
                )
            )
        return SceneSpec(
            parts=tuple(parts),
            motions=tuple(motions),
            frame_count=int(data["frame_count"]),
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidSpec(f"malformed scene document: {exc}") from exc
