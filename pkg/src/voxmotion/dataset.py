"""Sequence manifests and depth/mask image files.

A manifest is a JSON document listing per-frame depth and mask images with
strictly increasing frame indices, the shared camera intrinsics, and the
depth unit scale. Depth images are single-channel 16-bit PNGs in
millimetres by default, with 0 marking invalid pixels; masks are 8-bit
PNGs where any nonzero pixel is inside the object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import MissingFile, NonMonotoneIndices, ParseError
from .preprocess import CameraIntrinsics, DepthFrame

DEFAULT_DEPTH_SCALE = 0.001  # millimetres to metres


@dataclass(frozen=True)
class FrameRecord:
    index: int
    depth_path: Path
    mask_path: Path


@dataclass(frozen=True)
class SequenceManifest:
    intrinsics: CameraIntrinsics
    depth_scale: float
    frames: tuple[FrameRecord, ...]
    root: Path


def read_manifest(path) -> SequenceManifest:
    """Load and validate a manifest; referenced files must exist."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise MissingFile(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc

    try:
        k = data["intrinsics"]
        intrinsics = CameraIntrinsics(
            fx=float(k["fx"]), fy=float(k["fy"]), cx=float(k["cx"]), cy=float(k["cy"])
        )
        raw_frames = data["frames"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed manifest: {exc}") from exc
    if not isinstance(raw_frames, list) or not raw_frames:
        raise ParseError(f"{path}: manifest needs a non-empty frames list")

    root = path.parent
    records = []
    previous = None
    for pos, entry in enumerate(raw_frames):
        try:
            index = int(entry["index"])
            depth_path = root / entry["depth"]
            mask_path = root / entry["mask"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: frame record {pos}: {exc}") from exc
        if previous is not None and index <= previous:
            raise NonMonotoneIndices(
                f"{path}: frame record {pos}: index {index} after {previous}"
            )
        previous = index
        for p in (depth_path, mask_path):
            if not p.is_file():
                raise MissingFile(f"{path}: frame record {pos}: missing file {p}")
        records.append(FrameRecord(index=index, depth_path=depth_path, mask_path=mask_path))

    scale = float(data.get("depth_scale", DEFAULT_DEPTH_SCALE))
    if scale <= 0:
        raise ParseError(f"{path}: depth_scale must be positive")
    return SequenceManifest(intrinsics=intrinsics, depth_scale=scale, frames=tuple(records), root=root)


def write_manifest(path, intrinsics: CameraIntrinsics, frames, depth_scale: float = DEFAULT_DEPTH_SCALE) -> None:
    """Write a manifest with paths stored relative to the manifest location."""
    path = Path(path)
    root = path.parent
    document = {
        "intrinsics": {"fx": intrinsics.fx, "fy": intrinsics.fy, "cx": intrinsics.cx, "cy": intrinsics.cy},
        "depth_scale": depth_scale,
        "frames": [
            {
                "index": record.index,
                "depth": str(Path(record.depth_path).relative_to(root)) if Path(record.depth_path).is_absolute() else str(record.depth_path),
                "mask": str(Path(record.mask_path).relative_to(root)) if Path(record.mask_path).is_absolute() else str(record.mask_path),
            }
            for record in frames
        ],
    }
    path.write_text(json.dumps(document, indent=2) + "\n")


def write_depth_png(path, depth_metres, scale: float = DEFAULT_DEPTH_SCALE) -> None:
    """Store a depth map as 16-bit PNG in units of ``scale`` metres."""
    depth = np.asarray(depth_metres, dtype=np.float64)
    counts = np.rint(depth / scale)
    counts = np.clip(counts, 0, np.iinfo(np.uint16).max).astype(np.uint16)
    Image.fromarray(counts, mode="I;16").save(path)


def read_depth_png(path, scale: float = DEFAULT_DEPTH_SCALE) -> np.ndarray:
    arr = np.asarray(Image.open(path))
    return arr.astype(np.float64) * scale


def write_mask_png(path, mask) -> None:
    arr = (np.asarray(mask).astype(bool) * np.uint8(255))
    Image.fromarray(arr, mode="L").save(path)


def read_mask_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L")) > 0


def load_frames(manifest: SequenceManifest) -> list[DepthFrame]:
    """Materialize every manifest record as a DepthFrame."""
    frames = []
    for record in manifest.frames:
        depth = read_depth_png(record.depth_path, manifest.depth_scale)
        mask = read_mask_png(record.mask_path)
        frames.append(
            DepthFrame(depth=depth, mask=mask, intrinsics=manifest.intrinsics, frame_index=record.index)
        )
    return frames
