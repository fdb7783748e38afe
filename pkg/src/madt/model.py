"""Core domain types: keyframe identifiers, queries, segments, and event paths.

Everything here is an immutable value object; later pipeline stages evolve
segments with :func:`dataclasses.replace` instead of mutating them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import MalformedId, TemporalConstraintError

#: Sentinel event score for segments with no feasible path; sinks in ranking.
INFEASIBLE = float("-inf")


@dataclass(frozen=True, order=True)
class KeyframeId:
    """Corpus-wide unique identifier of one indexed video frame."""

    video: str
    frame_index: int

    def __post_init__(self) -> None:
        if not self.video or "/" in self.video:
            raise MalformedId(f"bad video id: {self.video!r}")
        if self.frame_index < 0:
            raise MalformedId(f"negative frame index: {self.frame_index}")

    def __str__(self) -> str:
        return render_keyframe_id(self)


def render_keyframe_id(kid: KeyframeId) -> str:
    """Canonical string form, e.g. ``V0001/0155``.

    The frame index is zero-padded to at least 4 digits and widens as needed,
    so parse(render(x)) == x for every valid id.
    """
    return f"{kid.video}/{kid.frame_index:04d}"


def parse_keyframe_id(s: str) -> KeyframeId:
    """Inverse of :func:`render_keyframe_id` on canonical strings."""
    video, sep, frame = s.rpartition("/")
    if not sep or not video:
        raise MalformedId(f"missing separator or video part: {s!r}")
    if not frame.isdigit():
        raise MalformedId(f"non-numeric frame index: {s!r}")
    return KeyframeId(video=video, frame_index=int(frame))


@dataclass(frozen=True)
class Keyframe:
    """One indexed frame: identity, its timestamp, and its index row."""

    id: KeyframeId
    timestamp_s: float
    embedding_row: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.timestamp_s) or self.timestamp_s < 0:
            raise ValueError(f"bad timestamp for {self.id}: {self.timestamp_s}")


@dataclass(frozen=True)
class DecomposedQuery:
    """A query split into a global context and ordered event texts."""

    context: str
    events: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.events:
            raise ValueError("a decomposed query needs at least one event")
        if any(not e.strip() for e in self.events):
            raise ValueError("event texts must be non-blank")

    @property
    def n_events(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class AsrSpan:
    """A timestamped stretch of transcribed speech within one video."""

    start_s: float
    end_s: float
    text: str

    def __post_init__(self) -> None:
        if self.start_s > self.end_s:
            raise ValueError(f"ASR span ends before it starts: {self}")


@dataclass(frozen=True)
class MetadataRecord:
    """Per-keyframe multimodal metadata plus the owning video's ASR spans."""

    keyframe: KeyframeId
    ocr_text: str = ""
    caption: str = ""
    objects: tuple[str, ...] = ()
    asr_spans: tuple[AsrSpan, ...] = ()

    def __post_init__(self) -> None:
        starts = [s.start_s for s in self.asr_spans]
        if starts != sorted(starts):
            raise ValueError(f"ASR spans not sorted by start for {self.keyframe}")


@dataclass(frozen=True)
class EventPath:
    """A temporally ordered keyframe assignment, one keyframe per event.

    Construction validates single-video membership and strict timestamp
    monotonicity; gap constraints are enforced by :func:`build_event_path`.
    """

    keyframes: tuple[KeyframeId, ...]
    per_event_scores: tuple[float, ...]
    timestamps: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.keyframes) == len(self.per_event_scores) == len(self.timestamps)):
            raise TemporalConstraintError("path fields have mismatched lengths")
        if not self.keyframes:
            raise TemporalConstraintError("empty event path")
        videos = {k.video for k in self.keyframes}
        if len(videos) != 1:
            raise TemporalConstraintError(f"path crosses videos: {sorted(videos)}")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if not b > a:
                raise TemporalConstraintError(f"timestamps not strictly increasing: {a} -> {b}")

    @property
    def total_score(self) -> float:
        return sum(self.per_event_scores)


def build_event_path(
    keyframes: tuple[KeyframeId, ...],
    per_event_scores: tuple[float, ...],
    timestamps: tuple[float, ...],
    max_gap_s: float,
) -> EventPath:
    """Construct an :class:`EventPath`, additionally enforcing gaps <= max_gap_s."""
    path = EventPath(keyframes, per_event_scores, timestamps)
    for a, b in zip(timestamps, timestamps[1:]):
        if b - a > max_gap_s:
            raise TemporalConstraintError(f"gap {b - a:.3f}s exceeds {max_gap_s:.3f}s")
    return path


@dataclass(frozen=True)
class CandidateSegment:
    """A (start, end) keyframe pair within one video, with score slots.

    ``boundary_score`` is filled at generation; the remaining slots are
    populated by later stages via ``dataclasses.replace``.
    """

    video: str
    start: KeyframeId
    end: KeyframeId
    start_s: float
    end_s: float
    boundary_score: float
    start_score: float = 0.0
    end_score: float = 0.0
    context_score: Optional[float] = None
    context_unscored: bool = False
    event_score: Optional[float] = None
    final_score: Optional[float] = None
    best_path: Optional[EventPath] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.start.video != self.video or self.end.video != self.video:
            raise ValueError(f"segment endpoints outside video {self.video}")
        if not self.start_s < self.end_s:
            raise ValueError(f"segment must span time: {self.start_s} .. {self.end_s}")
        if self.context_score is not None and not 0.0 <= self.context_score <= 1.0:
            raise ValueError(f"context score out of range: {self.context_score}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def infeasible(self) -> bool:
        return self.event_score == INFEASIBLE
