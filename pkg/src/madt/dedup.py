"""Two-stage near-duplicate removal for keyframes of one corpus.

Stage 1 drops a frame whose perceptual hash is within `phash_threshold`
Hamming bits of the most recently kept frame in the same video. Stage 2
drops survivors whose embedding cosine to ANY kept frame of the same video
exceeds `cos_threshold`. Scope is per-video with a keep-first policy, so
the earliest frame of every video always survives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import KeyframeId
from .phash import hamming64

DEFAULT_PHASH_THRESHOLD = 8
DEFAULT_COS_THRESHOLD = 0.965


@dataclass(frozen=True)
class DedupInput:
    """One keyframe as seen by dedup: id, optional pHash, unit embedding."""

    id: KeyframeId
    timestamp_s: float
    phash: Optional[int]
    embedding: np.ndarray


@dataclass
class DedupReport:
    kept: int = 0
    dropped_phash: int = 0
    dropped_cosine: int = 0
    #: (dropped_id, survivor_id, stage) with stage in {"phash", "cosine"}
    drop_pairs: list[tuple[KeyframeId, KeyframeId, str]] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.kept + self.dropped_phash + self.dropped_cosine

    def as_dict(self) -> dict:
        return {
            "kept": self.kept,
            "dropped_phash": self.dropped_phash,
            "dropped_cosine": self.dropped_cosine,
            "drop_pairs": [
                {"dropped": str(d), "survivor": str(s), "stage": stage}
                for d, s, stage in self.drop_pairs
            ],
        }


def dedup(
    keyframes: Sequence[DedupInput],
    phash_threshold: int = DEFAULT_PHASH_THRESHOLD,
    cos_threshold: float = DEFAULT_COS_THRESHOLD,
) -> tuple[list[DedupInput], DedupReport]:
    """Single forward pass per video; returns (survivors, report).

    `keyframes` must be sorted by (video, timestamp). Frames without a hash
    skip stage 1. Idempotent: re-running on the survivors keeps all of them.
    """
    if not 0.0 < cos_threshold <= 1.0:
        raise ValueError(f"cos_threshold must be in (0, 1], got {cos_threshold}")
    order = [(kf.id.video, kf.timestamp_s) for kf in keyframes]
    if order != sorted(order):
        raise ValueError("dedup input must be sorted by (video, timestamp)")

    report = DedupReport()
    survivors: list[DedupInput] = []
    last_kept_hash: dict[str, tuple[int, KeyframeId]] = {}
    kept_per_video: dict[str, list[DedupInput]] = {}

    for kf in keyframes:
        video = kf.id.video
        prev = last_kept_hash.get(video)
        if kf.phash is not None and prev is not None:
            prev_hash, prev_id = prev
            if hamming64(kf.phash, prev_hash) <= phash_threshold:
                report.dropped_phash += 1
                report.drop_pairs.append((kf.id, prev_id, "phash"))
                continue
        duplicate_of: Optional[KeyframeId] = None
        for kept in kept_per_video.get(video, ()):
            if float(np.dot(kept.embedding, kf.embedding)) > cos_threshold:
                duplicate_of = kept.id
                break
        if duplicate_of is not None:
            report.dropped_cosine += 1
            report.drop_pairs.append((kf.id, duplicate_of, "cosine"))
            continue
        survivors.append(kf)
        report.kept += 1
        kept_per_video.setdefault(video, []).append(kf)
        if kf.phash is not None:
            last_kept_hash[video] = (kf.phash, kf.id)
    return survivors, report
