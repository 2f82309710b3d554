"""Exception types shared across the pipeline."""


class VoxmotionError(Exception):
    """Base class for all pipeline errors."""


class EmptyCloud(VoxmotionError):
    """An operation that requires points received an empty cloud."""


class DegenerateCorrespondences(VoxmotionError):
    """Too few or rank-deficient point pairs for a rigid fit."""


class NotARotation(VoxmotionError):
    """Matrix is not orthonormal with determinant +1."""


class TooFewPoints(VoxmotionError):
    """Cloud is too small for the requested neighborhood statistic."""


class FrameSkipped(VoxmotionError):
    """Frame carries no usable object pixels and must be skipped."""


class NoCorrespondences(VoxmotionError):
    """ICP found fewer matches than the minimum pair count."""


class InsufficientFrames(VoxmotionError):
    """Sequence too short to form any frame pair."""


class EmptyAfterExclusion(VoxmotionError):
    """No reliable decisions remain once unreliable pairs are dropped."""


class InvalidSpec(VoxmotionError):
    """Scene specification violates its invariants."""


class PointBehindCamera(VoxmotionError):
    """Depth rendering requires every point to have positive depth."""


class ParseError(VoxmotionError):
    """Malformed input file (PLY, manifest, scene spec)."""


class MissingFile(VoxmotionError):
    """A file referenced by a manifest does not exist."""


class NonMonotoneIndices(VoxmotionError):
    """Manifest frame indices are not strictly increasing."""


class IoError(VoxmotionError):
    """Failed to write an output artifact."""
