"""Shared fixtures: random corpora, fake embedders, and the demo corpus."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from madt.embedding import l2_normalize
from madt.index import VectorIndex
from madt.model import Keyframe, KeyframeId


class VecEmbedder:
    """Embedder test double returning preset vectors by exact text."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None, seed: int = 0):
        self._dim = dim
        self._vectors = dict(vectors or {})
        self._rng = np.random.default_rng(seed)

    def dimension(self) -> int:
        return self._dim

    def add(self, text: str, vec: np.ndarray) -> None:
        self._vectors[text] = l2_normalize(vec)

    def embed_text(self, text: str) -> np.ndarray:
        if text not in self._vectors:
            self._vectors[text] = l2_normalize(self._rng.standard_normal(self._dim))
        return self._vectors[text].copy()

    def embed_image(self, image_bytes: bytes) -> np.ndarray:
        return self.embed_text("image:" + image_bytes.hex())


def make_random_index(
    rng: np.random.Generator,
    n_videos: int,
    frames_per_video: int,
    dim: int,
    spacing_s: float = 2.0,
) -> VectorIndex:
    """Random unit-vector corpus with evenly spaced timestamps."""
    keyframes: list[Keyframe] = []
    rows: list[np.ndarray] = []
    for v in range(n_videos):
        video = f"V{v + 1:04d}"
        for i in range(frames_per_video):
            kid = KeyframeId(video=video, frame_index=i * 10)
            keyframes.append(Keyframe(id=kid, timestamp_s=i * spacing_s, embedding_row=len(rows)))
            rows.append(l2_normalize(rng.standard_normal(dim)))
    return VectorIndex(keyframes, np.stack(rows))


@pytest.fixture(scope="session")
def demo_corpus_dir(tmp_path_factory) -> Path:
    from madt.demo import build_demo_corpus

    path = tmp_path_factory.mktemp("demo") / "corpus"
    build_demo_corpus(path)
    return path


@pytest.fixture(scope="session")
def demo_corpus(demo_corpus_dir):
    from madt.corpus import load_corpus

    return load_corpus(demo_corpus_dir)
