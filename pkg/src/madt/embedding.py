"""Embedding providers: everything that maps text or images to unit vectors.

The engine never runs a real encoder; it talks to one of three providers:

* :class:`StubEmbedder` — deterministic hashed bag-of-words, for tests and
  offline demo corpora.
* :class:`PrecomputedEmbedder` — exact-key lookup into a KFE file of
  precomputed vectors (text keys are looked up verbatim; image bytes are
  looked up under ``sha256:<hexdigest>``).
* :class:`HttpEmbedder` — generic JSON adapter for any remote encoder,
  disabled unless an endpoint is configured.
"""
from __future__ import annotations

import base64
import hashlib
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import AdapterError, DimensionMismatch, FormatError, InvalidDimension, UnknownKey
from .kfe import read_kfe
from .text import tokenize

NORM_TOLERANCE = 1e-6


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; zero vectors are rejected."""
    arr = np.asarray(vec, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return arr / norm


@runtime_checkable
class EmbeddingProvider(Protocol):
    def embed_text(self, text: str) -> np.ndarray: ...

    def embed_image(self, image_bytes: bytes) -> np.ndarray: ...

    def dimension(self) -> int: ...


class StubEmbedder:
    """Deterministic hashed bag-of-words embedder.

    Each token maps (via a seeded hash) to a pseudo-random unit vector; a
    text embeds as the normalized sum of its token vectors. Texts sharing no
    tokens are near-orthogonal in expectation, which is enough similarity
    structure for offline tests.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 2:
            raise InvalidDimension(f"dimension must be >= 2, got {dim}")
        self._dim = dim
        self._seed = seed
        self._token_cache: dict[str, np.ndarray] = {}

    def dimension(self) -> int:
        return self._dim

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=str(self._seed).encode("utf-8")
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            cached = l2_normalize(rng.standard_normal(self._dim))
            self._token_cache[token] = cached
        return cached

    def embed_text(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            return self._token_vector("").copy()
        total = np.zeros(self._dim)
        for token in tokens:
            total += self._token_vector(token)
        return l2_normalize(total)

    def embed_image(self, image_bytes: bytes) -> np.ndarray:
        # Images have no tokens; hash the raw bytes to one stable pseudo-token.
        return self._token_vector("img:" + hashlib.sha256(image_bytes).hexdigest()).copy()


def image_lookup_key(image_bytes: bytes) -> str:
    """Content-addressed lookup key for precomputed image embeddings."""
    return "sha256:" + hashlib.sha256(image_bytes).hexdigest()


class PrecomputedEmbedder:
    """Serves embeddings recorded ahead of time; unknown keys are errors."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise FormatError("no precomputed vectors")
        dims = {v.shape[-1] for v in vectors.values()}
        if len(dims) != 1:
            raise FormatError(f"mixed dimensions in precomputed vectors: {sorted(dims)}")
        self._dim = dims.pop()
        self._vectors = {k: l2_normalize(v) for k, v in vectors.items()}

    def dimension(self) -> int:
        return self._dim

    def _lookup(self, key: str) -> np.ndarray:
        vec = self._vectors.get(key)
        if vec is None:
            raise UnknownKey(f"no precomputed embedding for {key!r}")
        return vec.copy()

    def embed_text(self, text: str) -> np.ndarray:
        return self._lookup(text)

    def embed_image(self, image_bytes: bytes) -> np.ndarray:
        return self._lookup(image_lookup_key(image_bytes))


def load_precomputed(path: str | Path) -> PrecomputedEmbedder:
    """Load a KFE file of precomputed query embeddings."""
    _, vectors = read_kfe(path)
    return PrecomputedEmbedder(vectors)


class HttpEmbedder:
    """Generic HTTP embedding adapter.

    Contract: POST {"kind": "text"|"image", "payload": <text or base64>}
    returns {"embedding": [f32, ...]}.
    """

    def __init__(self, url: str, dim: int, timeout_s: float = 10.0, client=None):
        import httpx

        self._url = url
        self._dim = dim
        self._client = client or httpx.Client(timeout=timeout_s)

    def dimension(self) -> int:
        return self._dim

    def _post(self, kind: str, payload: str) -> np.ndarray:
        import httpx

        try:
            resp = self._client.post(self._url, json={"kind": kind, "payload": payload})
            resp.raise_for_status()
            values = resp.json()["embedding"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise AdapterError(f"embedding call failed: {exc}") from exc
        vec = np.asarray(values, dtype=np.float64)
        if vec.shape != (self._dim,):
            raise DimensionMismatch(f"adapter returned shape {vec.shape}, expected ({self._dim},)")
        return l2_normalize(vec)

    def embed_text(self, text: str) -> np.ndarray:
        return self._post("text", text)

    def embed_image(self, image_bytes: bytes) -> np.ndarray:
        return self._post("image", base64.b64encode(image_bytes).decode("ascii"))
