"""Exception types shared across the package."""


class MadtError(Exception):
    """Base class for all package errors."""


class MalformedId(MadtError):
    """A keyframe id string does not match the canonical rendering."""


class InvalidDimension(MadtError):
    """Embedding dimension is unusable (< 2)."""


class DimensionMismatch(MadtError):
    """Vectors of incompatible dimension were combined."""


class UnknownKey(MadtError):
    """A precomputed embedding lookup key is absent."""


class FormatError(MadtError):
    """A corpus input file violates its documented format."""


class EmptyImage(MadtError):
    """phash64 was given an image with no pixels."""


class DanglingMetadata(MadtError):
    """A metadata record references a keyframe with no embedding."""


class EmptyIndex(MadtError):
    """The vector index holds no rows."""


class UnknownVideo(MadtError):
    """A video id is not present in the corpus."""


class UnknownKeyframe(MadtError):
    """A keyframe id is not present in the corpus."""


class EmptyFilter(MadtError):
    """A metadata filter with no clauses was used as a filter."""


class TooFewEvents(MadtError):
    """Candidate generation needs at least two events."""


class NoFeasiblePath(MadtError):
    """No event path satisfies the temporal constraints of a segment."""


class ScorerUnavailable(MadtError):
    """The context scorer cannot be reached; scoring degrades to 0."""


class DecompositionFailed(MadtError):
    """A raw query could not be split into event clauses."""


class FixtureMissing(MadtError):
    """Image search requested but no fixture directory or adapter configured."""


class TemporalConstraintError(MadtError):
    """An event path violates timestamp ordering or gap constraints."""


class AdapterError(MadtError):
    """A remote adapter call failed or returned a malformed payload."""


class CorpusError(MadtError):
    """A corpus directory is missing, incomplete, or inconsistent."""
