"""Frame-pair and sequence classification from local region registrations.

Two preprocessed clouds are merged, split into cubic regions, and each
co-occupied region is registered with ICP. Every accepted transform is
quantized into an integer motion key; the number of distinct keys decides
the pair label (no motion, rigid motion, articulated motion), and a sliding
mode filter over the pair labels yields the sequence verdict.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyAfterExclusion, EmptyCloud, InsufficientFrames
from .errors import DegenerateCorrespondences, NoCorrespondences
from .geometry import RigidTransform, aabb_diagonal, as_points
from .registration import IcpParams, RegistrationResult, icp


class PairLabel(str, Enum):
    NM = "NM"
    RM = "RM"
    AM = "AM"
    UNRELIABLE = "UNRELIABLE"


class Verdict(str, Enum):
    ARTICULATED = "Articulated"
    RIGID = "Rigid"
    NONDETERMINISTIC = "Nondeterministic"


# Tie precedence for the mode filter: articulation evidence outranks the rest.
_PRECEDENCE = {PairLabel.AM: 3, PairLabel.RM: 2, PairLabel.NM: 1}


@dataclass(frozen=True)
class ClassifierParams:
    """Classification settings.

    ``region_size`` is the local registration cube edge; ``None`` resolves
    to a fifth of the merged-cloud bounding-box diagonal. The quantization
    bins absorb registration noise before keys are compared; the zero
    tolerances additionally put dead zones around the no-motion values so
    that sub-resolution estimates of "nothing moved here" do not straddle
    the sign boundaries into several keys (see quantize_transform).
    """

    region_size: float | None = None
    quat_bin: float = 0.1
    trans_bin: float = 0.1
    frame_skip: int = 5
    min_matched_fraction: float = 0.5
    min_fitness: float = 0.3
    filter_window: int = 5
    zero_q_tol: float = 0.02
    zero_t_tol: float = 0.01

    def __post_init__(self):
        if self.region_size is not None and self.region_size <= 0:
            raise ValueError("region_size must be positive")
        if self.quat_bin <= 0 or self.trans_bin <= 0:
            raise ValueError("quantization bins must be positive")
        if self.frame_skip < 1:
            raise ValueError("frame_skip must be >= 1")
        if not 0 < self.min_matched_fraction <= 1:
            raise ValueError("min_matched_fraction must be in (0, 1]")
        if not 0 <= self.min_fitness <= 1:
            raise ValueError("min_fitness must be in [0, 1]")
        if self.filter_window < 1 or self.filter_window % 2 == 0:
            raise ValueError("filter_window must be odd and >= 1")
        if self.zero_q_tol < 0 or self.zero_t_tol < 0:
            raise ValueError("zero tolerances must be non-negative")


@dataclass(frozen=True)
class MotionKey:
    """Integer bin tuple identifying one distinct local motion."""

    qbins: tuple[int, int, int, int]
    tbins: tuple[int, int, int]


@dataclass
class VoxelRegion:
    """One grid cube with the points of both clouds that fall inside it."""

    cell: tuple[int, int, int]
    points_a: np.ndarray
    points_b: np.ndarray


@dataclass
class FrameDecision:
    """Label for one frame pair plus the evidence behind it."""

    label: PairLabel
    key_count: int
    keys: dict[MotionKey, list[tuple[int, int, int]]]
    pair: tuple[int, int]
    kept: int = 0
    skipped: int = 0
    eligible: int = 0


@dataclass
class PairAnalysis:
    """Full output of one pair classification, including per-region results."""

    decision: FrameDecision
    regions: list[VoxelRegion]
    transforms: list[tuple[tuple[int, int, int], RigidTransform]]
    region_size: float


@dataclass
class SequenceVerdict:
    label: Verdict
    decisions: list[FrameDecision]
    filtered: list[PairLabel]
    probabilities: dict[str, float]
    no_reliable_pairs: bool = False


def default_workers() -> int:
    """Worker count for per-region registration, overridable via environment."""
    try:
        return max(1, int(os.environ.get("VOXMOTION_THREADS", "1")))
    except ValueError:
        return 1


def resolve_region_size(cloud_a, cloud_b, region_size: float | None) -> float:
    if region_size is not None:
        return region_size
    merged = np.vstack([as_points(cloud_a), as_points(cloud_b)])
    auto = aabb_diagonal(merged) / 5.0
    # A degenerate (single-location) merged cloud still needs one cell.
    return auto if auto > 0 else 1.0


def resolve_icp_params(icp_params: IcpParams, region_size: float) -> IcpParams:
    if icp_params.max_pair_distance is not None:
        return icp_params
    return IcpParams(
        max_iterations=icp_params.max_iterations,
        tolerance=icp_params.tolerance,
        max_pair_distance=region_size / 2.0,
        min_pairs=icp_params.min_pairs,
    )


def voxel_partition(cloud_a, cloud_b, region_size: float | None = None) -> list[VoxelRegion]:
    """Split both clouds on one shared grid anchored at the merged AABB min.

    Emits every cell occupied by at least one point of either cloud, in
    ascending lexicographic cell order.
    """
    a = as_points(cloud_a)
    b = as_points(cloud_b)
    if len(a) == 0 or len(b) == 0:
        raise EmptyCloud("both clouds must be non-empty to partition")
    edge = resolve_region_size(a, b, region_size)

    origin = np.minimum(a.min(axis=0), b.min(axis=0))
    cells_a = np.floor((a - origin) / edge).astype(np.int64)
    cells_b = np.floor((b - origin) / edge).astype(np.int64)

    members_a: dict[tuple[int, int, int], list[int]] = {}
    members_b: dict[tuple[int, int, int], list[int]] = {}
    for i, cell in enumerate(map(tuple, cells_a)):
        members_a.setdefault(cell, []).append(i)
    for i, cell in enumerate(map(tuple, cells_b)):
        members_b.setdefault(cell, []).append(i)

    empty = np.empty((0, 3))
    regions = []
    for cell in sorted(members_a.keys() | members_b.keys()):
        sel_a = a[members_a[cell]] if cell in members_a else empty
        sel_b = b[members_b[cell]] if cell in members_b else empty
        regions.append(VoxelRegion(cell, sel_a, sel_b))
    return regions


def register_regions(
    regions: list[VoxelRegion],
    params: ClassifierParams = ClassifierParams(),
    icp_params: IcpParams = IcpParams(),
    workers: int = 1,
) -> tuple[list[tuple[tuple[int, int, int], RigidTransform]], int, int]:
    """Run per-region ICP and keep confident results.

    Returns (kept transforms in region order, skipped count, eligible count)
    where a region is eligible when it holds source points at all. Regions
    with an empty side, too few matches, degenerate geometry, or fitness
    below the confidence floor are counted as skips, not errors.
    """
    if icp_params.max_pair_distance is None:
        raise ValueError("resolve max_pair_distance before registering regions")

    def attempt(region: VoxelRegion) -> RegistrationResult | None:
        if len(region.points_b) == 0 or len(region.points_a) < icp_params.min_pairs:
            return None
        try:
            return icp(region.points_a, region.points_b, params=icp_params)
        except (NoCorrespondences, DegenerateCorrespondences):
            return None

    eligible_regions = [r for r in regions if len(r.points_a) > 0]
    if workers > 1 and len(eligible_regions) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attempt, eligible_regions))
    else:
        results = [attempt(r) for r in eligible_regions]

    kept: list[tuple[tuple[int, int, int], RigidTransform]] = []
    skipped = 0
    for region, result in zip(eligible_regions, results):
        if result is None or result.fitness < params.min_fitness:
            skipped += 1
        else:
            kept.append((region.cell, result.transform))
    return kept, skipped, len(eligible_regions)


def quantize_transform(
    transform: RigidTransform,
    quat_bin: float,
    trans_bin: float,
    zero_q_tol: float = 0.0,
    zero_t_tol: float = 0.0,
) -> MotionKey:
    """Floor-quantize quaternion and translation components into integer bins.

    Components carry dead zones around the no-motion values before binning:
    the rotation snaps to the exact identity when its angle is below the
    resolution implied by ``zero_q_tol`` (1 - w grows quadratically with
    angle, so the w test is ``1 - w <= tol^2 / 2``), and any vector or
    translation component smaller than its tolerance is zeroed. Without
    the dead zones, estimation noise around zero would scatter identical
    sub-resolution motions across the sign boundary into several keys.
    """
    q = transform.rotation
    t = transform.translation
    if 1.0 - q[0] <= 0.5 * zero_q_tol * zero_q_tol:
        q = (1.0, 0.0, 0.0, 0.0)
    else:
        q = (q[0],) + tuple(0.0 if abs(c) <= zero_q_tol else c for c in q[1:])
    t = tuple(0.0 if abs(c) <= zero_t_tol else c for c in t)
    qbins = tuple(int(math.floor(c / quat_bin)) for c in q)
    tbins = tuple(int(math.floor(c / trans_bin)) for c in t)
    return MotionKey(qbins, tbins)


def no_motion_key(quat_bin: float, trans_bin: float) -> MotionKey:
    return quantize_transform(RigidTransform.identity(), quat_bin, trans_bin)


def analyze_pair(
    cloud_a,
    cloud_b,
    params: ClassifierParams = ClassifierParams(),
    icp_params: IcpParams = IcpParams(),
    pair: tuple[int, int] = (0, 1),
    workers: int = 1,
) -> PairAnalysis:
    """Classify one frame pair, keeping the per-region evidence around."""
    edge = resolve_region_size(cloud_a, cloud_b, params.region_size)
    regions = voxel_partition(cloud_a, cloud_b, edge)
    resolved_icp = resolve_icp_params(icp_params, edge)
    kept, skipped, eligible = register_regions(regions, params, resolved_icp, workers=workers)

    table: dict[MotionKey, list[tuple[int, int, int]]] = {}
    for cell, transform in kept:
        key = quantize_transform(
            transform, params.quat_bin, params.trans_bin, params.zero_q_tol, params.zero_t_tol
        )
        table.setdefault(key, []).append(cell)

    key_count = len(table)
    if eligible == 0 or len(kept) / eligible < params.min_matched_fraction or key_count == 0:
        label = PairLabel.UNRELIABLE
    elif key_count >= 2:
        label = PairLabel.AM
    elif next(iter(table)) == no_motion_key(params.quat_bin, params.trans_bin):
        label = PairLabel.NM
    else:
        label = PairLabel.RM

    decision = FrameDecision(
        label=label,
        key_count=key_count,
        keys=table,
        pair=pair,
        kept=len(kept),
        skipped=skipped,
        eligible=eligible,
    )
    return PairAnalysis(decision=decision, regions=regions, transforms=kept, region_size=edge)


def classify_pair(
    cloud_a,
    cloud_b,
    params: ClassifierParams = ClassifierParams(),
    icp_params: IcpParams = IcpParams(),
    pair: tuple[int, int] = (0, 1),
    workers: int = 1,
) -> FrameDecision:
    return analyze_pair(cloud_a, cloud_b, params, icp_params, pair, workers).decision


def mode_filter(decisions, window: int) -> list[PairLabel]:
    """Sliding max-count filter over the reliable pair labels.

    Unreliable entries are dropped first. Each output is the most frequent
    label in a window of ``window`` entries around position i; near the ends
    the window is shifted inward so it keeps full width whenever possible.
    Count ties break by precedence AM > RM > NM.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    labels = [d.label if isinstance(d, FrameDecision) else PairLabel(d) for d in decisions]
    labels = [lab for lab in labels if lab != PairLabel.UNRELIABLE]
    if not labels:
        raise EmptyAfterExclusion("no reliable decisions to filter")

    n = len(labels)
    half = window // 2
    out: list[PairLabel] = []
    for i in range(n):
        lo = max(0, min(i - half, n - window))
        hi = min(n, lo + window)
        counts: dict[PairLabel, int] = {}
        for lab in labels[lo:hi]:
            counts[lab] = counts.get(lab, 0) + 1
        out.append(max(counts, key=lambda lab: (counts[lab], _PRECEDENCE[lab])))
    return out


def verdict_from_labels(filtered: list[PairLabel]) -> Verdict:
    if any(lab == PairLabel.AM for lab in filtered):
        return Verdict.ARTICULATED
    if any(lab == PairLabel.RM for lab in filtered):
        return Verdict.RIGID
    return Verdict.NONDETERMINISTIC


def classify_sequence(
    frames,
    params: ClassifierParams = ClassifierParams(),
    icp_params: IcpParams = IcpParams(),
    indices: list[int] | None = None,
    stride: int | None = None,
    workers: int = 1,
) -> SequenceVerdict:
    """Classify a whole sequence of preprocessed clouds.

    Pairs are formed as (i, i + frame_skip) with i advancing by ``stride``
    (the frame skip itself by default) over the original frame indices;
    missing frames simply drop the pairs they would participate in. The
    verdict is Articulated if any filtered label is AM, else Rigid if any
    is RM, else Nondeterministic. When every pair is unreliable the verdict
    is Nondeterministic with ``no_reliable_pairs`` set.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise InsufficientFrames(f"need at least 2 frames, got {len(frames)}")
    if indices is None:
        indices = list(range(len(frames)))
    if len(indices) != len(frames):
        raise ValueError("indices must parallel frames")
    by_index = dict(zip(indices, frames))
    if len(by_index) != len(frames):
        raise ValueError("frame indices must be unique")

    skip = params.frame_skip
    step = stride if stride is not None else skip
    if step < 1:
        raise ValueError("stride must be >= 1")

    pairs = []
    i = min(indices)
    last = max(indices)
    while i + skip <= last:
        if i in by_index and i + skip in by_index:
            pairs.append((i, i + skip))
        i += step
    if not pairs:
        raise InsufficientFrames(f"no (i, i+{skip}) pairs available from {len(frames)} frames")

    decisions = [
        classify_pair(by_index[i], by_index[j], params, icp_params, pair=(i, j), workers=workers)
        for i, j in pairs
    ]

    reliable = [d for d in decisions if d.label != PairLabel.UNRELIABLE]
    if not reliable:
        return SequenceVerdict(
            label=Verdict.NONDETERMINISTIC,
            decisions=decisions,
            filtered=[],
            probabilities={lab.value: 0.0 for lab in (PairLabel.NM, PairLabel.RM, PairLabel.AM)},
            no_reliable_pairs=True,
        )

    filtered = mode_filter(decisions, params.filter_window)
    probabilities = {
        lab.value: sum(1 for d in reliable if d.label == lab) / len(reliable)
        for lab in (PairLabel.NM, PairLabel.RM, PairLabel.AM)
    }
    return SequenceVerdict(
        label=verdict_from_labels(filtered),
        decisions=decisions,
        filtered=filtered,
        probabilities=probabilities,
    )
