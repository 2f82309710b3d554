"""Exact nearest-neighbor search and point-to-point ICP.

The index wraps a k-d tree but guarantees brute-force semantics: the
returned neighbor is the true nearest point, with exact distance ties
resolved toward the lowest stored index. ICP alternates gated nearest
correspondences with closed-form rigid fits and accumulates the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, NoCorrespondences
from .geometry import RigidTransform, as_points, fit_rigid


class NnIndex:
    """Immutable nearest-neighbor index over one cloud; shareable across threads."""

    def __init__(self, cloud):
        pts = as_points(cloud)
        if len(pts) == 0:
            raise EmptyCloud("cannot index an empty cloud")
        self.points = pts
        self._tree = cKDTree(pts)

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, query, max_dist: float | None = None) -> tuple[int, float] | None:
        """Index and distance of the nearest stored point, or None beyond max_dist.

        Ties are broken by the lowest index, matching a linear scan that
        compares squared distances.
        """
        q = np.asarray(query, dtype=np.float64).reshape(3)
        dist, idx = self._tree.query(q)
        idx, dist = self._resolve(q, float(dist), int(idx))
        if max_dist is not None and dist > max_dist:
            return None
        return idx, dist

    def _resolve(self, q: np.ndarray, dist: float, idx: int) -> tuple[int, float]:
        # Re-rank every candidate within a whisker of the tree's answer using
        # the same arithmetic a brute-force scan would use, so exact ties land
        # on the lowest index.
        radius = dist * (1.0 + 1e-12)
        candidates = sorted(self._tree.query_ball_point(q, radius))
        if not candidates:
            return idx, dist
        diffs = self.points[candidates] - q
        d2 = np.einsum("ij,ij->i", diffs, diffs)
        best = int(np.argmin(d2))  # argmin keeps the first (lowest) index on ties
        return candidates[best], float(np.sqrt(d2[best]))

    def batch_nearest(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized nearest lookup for many queries; same tie-break contract."""
        q = as_points(queries)
        k = min(2, len(self.points))
        dist, idx = self._tree.query(q, k=k)
        if k == 1:
            return idx.reshape(-1).astype(np.int64), dist.reshape(-1)
        out_idx = idx[:, 0].astype(np.int64)
        out_dist = dist[:, 0].copy()
        ties = np.nonzero(dist[:, 0] == dist[:, 1])[0]
        for row in ties:
            out_idx[row], out_dist[row] = self._resolve(q[row], float(dist[row, 0]), int(idx[row, 0]))
        return out_idx, out_dist


@dataclass(frozen=True)
class IcpParams:
    """ICP settings.

    ``max_pair_distance`` gates correspondences; ``None`` means the caller
    derives it from the local region scale (half the region edge in the
    classifier) before running.
    """

    max_iterations: int = 50
    tolerance: float = 1e-6
    max_pair_distance: float | None = None
    min_pairs: int = 3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_pair_distance is not None and self.max_pair_distance <= 0:
            raise ValueError("max_pair_distance must be positive")
        if self.min_pairs < 3:
            raise ValueError("min_pairs must be >= 3 for a rigid fit")


@dataclass(frozen=True)
class RegistrationResult:
    transform: RigidTransform
    fitness: float
    rmse: float
    converged: bool
    matched_pairs: int
    iterations: int = 0
    rmse_history: tuple[float, ...] = field(default=())


def icp(
    source,
    target,
    init: RigidTransform | None = None,
    params: IcpParams = IcpParams(),
) -> RegistrationResult:
    """Point-to-point ICP aligning source onto target.

    Each iteration matches every transformed source point to its nearest
    target point within ``max_pair_distance``, fits a rigid update on the
    matches, and accumulates it. Stops when the matched RMSE change drops
    below ``tolerance`` (or hits exactly zero, in which case the current
    transform is already optimal and is returned untouched).

    Raises NoCorrespondences when the first iteration matches fewer than
    ``min_pairs`` points; that signals the caller's skip path.
    """
    src = as_points(source)
    dst = as_points(target)
    if len(dst) == 0:
        raise EmptyCloud("ICP target is empty")
    if params.max_pair_distance is None:
        raise ValueError("max_pair_distance must be resolved before running ICP")
    max_dist = params.max_pair_distance

    index = NnIndex(dst)
    transform = RigidTransform.identity() if init is None else init

    history: list[float] = []
    prev_rmse: float | None = None
    converged = False
    iterations = 0

    for iteration in range(1, params.max_iterations + 1):
        iterations = iteration
        moved = transform.apply(src)
        idx, dist = index.batch_nearest(moved)
        valid = dist <= max_dist
        matched = int(valid.sum())
        if matched < params.min_pairs:
            if iteration == 1:
                raise NoCorrespondences(
                    f"{matched} matches within {max_dist:.6g} m, need {params.min_pairs}"
                )
            break
        rmse = float(np.sqrt(np.mean(dist[valid] ** 2)))
        history.append(rmse)
        if rmse == 0.0:
            converged = True
            break
        if prev_rmse is not None and abs(prev_rmse - rmse) < params.tolerance:
            converged = True
            break
        delta = fit_rigid(moved[valid], dst[idx[valid]])
        transform = delta @ transform
        prev_rmse = rmse

    # Final stats at the returned transform.
    moved = transform.apply(src)
    idx, dist = index.batch_nearest(moved)
    valid = dist <= max_dist
    matched = int(valid.sum())
    rmse = float(np.sqrt(np.mean(dist[valid] ** 2))) if matched else float("inf")
    return RegistrationResult(
        transform=transform,
        fitness=matched / len(src),
        rmse=rmse,
        converged=converged,
        matched_pairs=matched,
        iterations=iterations,
        rmse_history=tuple(history),
    )
