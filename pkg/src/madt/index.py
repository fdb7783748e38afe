"""Exact cosine k-NN over keyframe embeddings.

No approximate structures: scoring is a dense dot product against unit-norm
rows, so results are exactly the brute-force ranking. Ties break by
ascending canonical keyframe id, which keeps every ranking reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .embedding import NORM_TOLERANCE
from .errors import DimensionMismatch, EmptyIndex, UnknownVideo
from .model import Keyframe, KeyframeId, render_keyframe_id


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors; equals dot(a, b) for unit inputs."""
    va = np.asarray(a, dtype=np.float64).reshape(-1)
    vb = np.asarray(b, dtype=np.float64).reshape(-1)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"{va.shape} vs {vb.shape}")
    if not (np.isfinite(va).all() and np.isfinite(vb).all()):
        raise ValueError("cosine inputs must be finite")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.dot(va, vb) / (na * nb))


@dataclass(frozen=True)
class ScoredHit:
    keyframe: KeyframeId
    score: float


class VectorIndex:
    """Immutable matrix of unit-norm keyframe embeddings with id bookkeeping."""

    def __init__(self, keyframes: Sequence[Keyframe], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(keyframes):
            raise ValueError(f"matrix shape {matrix.shape} does not match {len(keyframes)} keyframes")
        norms = np.linalg.norm(matrix, axis=1)
        if len(keyframes) and not np.allclose(norms, 1.0, atol=NORM_TOLERANCE):
            raise ValueError("index rows must be unit-normalized")
        self._matrix = matrix
        self._keyframes = list(keyframes)
        self._canonical = np.array([render_keyframe_id(kf.id) for kf in keyframes])
        self._row_by_id = {kf.id: i for i, kf in enumerate(keyframes)}
        if len(self._row_by_id) != len(keyframes):
            raise ValueError("duplicate keyframe ids in index")
        self._rows_by_video: dict[str, list[int]] = {}
        for i, kf in enumerate(keyframes):
            self._rows_by_video.setdefault(kf.id.video, []).append(i)
        for rows in self._rows_by_video.values():
            rows.sort(key=lambda r: self._keyframes[r].timestamp_s)

    def __len__(self) -> int:
        return len(self._keyframes)

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def videos(self) -> list[str]:
        return sorted(self._rows_by_video)

    @property
    def keyframes(self) -> list[Keyframe]:
        return list(self._keyframes)

    def has_video(self, video: str) -> bool:
        return video in self._rows_by_video

    def keyframe(self, kid: KeyframeId) -> Keyframe:
        row = self._row_by_id.get(kid)
        if row is None:
            raise KeyError(kid)
        return self._keyframes[row]

    def row_of(self, kid: KeyframeId) -> Optional[int]:
        return self._row_by_id.get(kid)

    def vector(self, kid: KeyframeId) -> np.ndarray:
        row = self._row_by_id.get(kid)
        if row is None:
            raise KeyError(kid)
        return self._matrix[row].copy()

    def video_keyframes(self, video: str) -> list[Keyframe]:
        """All keyframes of one video in timestamp order."""
        rows = self._rows_by_video.get(video)
        if rows is None:
            raise UnknownVideo(video)
        return [self._keyframes[r] for r in rows]

    def _query_vector(self, query: np.ndarray) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.dim:
            raise DimensionMismatch(f"query dim {q.shape[0]} != index dim {self.dim}")
        norm = float(np.linalg.norm(q))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("query vector must be finite and non-zero")
        return q / norm

    def search(
        self,
        query: np.ndarray,
        k: int,
        restrict: Optional[Iterable[KeyframeId]] = None,
    ) -> list[ScoredHit]:
        """Top-k by descending cosine; ties break by ascending canonical id."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if len(self._keyframes) == 0:
            raise EmptyIndex("index holds no keyframes")
        q = self._query_vector(query)

        if restrict is None:
            rows = np.arange(len(self._keyframes))
        else:
            rows = np.array(
                sorted({r for kid in restrict if (r := self._row_by_id.get(kid)) is not None}),
                dtype=int,
            )
            if rows.size == 0:
                return []
        scores = self._matrix[rows] @ q
        order = np.lexsort((self._canonical[rows], -scores))[:k]
        return [
            ScoredHit(keyframe=self._keyframes[rows[i]].id, score=float(scores[i]))
            for i in order
        ]

    def scores_for_video(self, query: np.ndarray, video: str) -> list[tuple[KeyframeId, float]]:
        """Every keyframe of `video` with its cosine score, in timestamp order."""
        rows = self._rows_by_video.get(video)
        if rows is None:
            raise UnknownVideo(video)
        q = self._query_vector(query)
        scores = self._matrix[rows] @ q
        return [(self._keyframes[r].id, float(s)) for r, s in zip(rows, scores)]
