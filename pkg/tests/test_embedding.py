"""Embedding providers: stub determinism, precomputed lookup, HTTP adapter."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from madt.embedding import (
    HttpEmbedder,
    PrecomputedEmbedder,
    StubEmbedder,
    image_lookup_key,
    l2_normalize,
    load_precomputed,
)
from madt.errors import AdapterError, FormatError, InvalidDimension, UnknownKey
from madt.index import cosine
from madt.kfe import write_kfe

# Frozen regression value: cosine of the reference hashed bag-of-words
# vectors for two token-disjoint texts at d=64, seed=7.
RED_HAT_VS_BLUE_CAR = 0.11258891426009819


class TestStubEmbedder:
    def test_rejects_tiny_dimension(self):
        with pytest.raises(InvalidDimension):
            StubEmbedder(dim=1)

    def test_deterministic(self):
        a = StubEmbedder(dim=8, seed=7).embed_text("red hat")
        b = StubEmbedder(dim=8, seed=7).embed_text("red hat")
        assert cosine(a, b) == pytest.approx(1.0)

    def test_bag_of_words_order_invariance(self):
        e = StubEmbedder(dim=8, seed=7)
        assert cosine(e.embed_text("red hat"), e.embed_text("hat red")) == pytest.approx(1.0)

    def test_disjoint_texts_nearly_orthogonal(self):
        e = StubEmbedder(dim=64, seed=7)
        c = cosine(e.embed_text("red hat"), e.embed_text("blue car"))
        assert abs(c) < 0.5
        assert c == pytest.approx(RED_HAT_VS_BLUE_CAR, abs=1e-12)

    def test_seed_changes_vectors(self):
        a = StubEmbedder(dim=64, seed=1).embed_text("red hat")
        b = StubEmbedder(dim=64, seed=2).embed_text("red hat")
        assert abs(cosine(a, b)) < 0.9

    def test_empty_token_input_uses_empty_token_vector(self):
        e = StubEmbedder(dim=16, seed=3)
        assert np.allclose(e.embed_text("!!!"), e.embed_text("??? ..."))

    def test_image_embedding_deterministic(self):
        e = StubEmbedder(dim=16, seed=3)
        assert np.allclose(e.embed_image(b"pixels"), e.embed_image(b"pixels"))

    @given(st.text(min_size=1, max_size=40))
    def test_unit_norm(self, text):
        vec = StubEmbedder(dim=12, seed=5).embed_text(text)
        assert abs(np.linalg.norm(vec) - 1.0) <= 1e-6


class TestPrecomputedEmbedder:
    def test_round_trip_via_kfe(self, tmp_path):
        rng = np.random.default_rng(0)
        stored = l2_normalize(rng.standard_normal(512))
        path = tmp_path / "queries.kfe"
        write_kfe(path, [("E:player kicks", stored)])
        provider = load_precomputed(path)
        assert provider.dimension() == 512
        assert cosine(provider.embed_text("E:player kicks"), stored) == pytest.approx(1.0)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "queries.kfe"
        write_kfe(path, [("E:known", np.ones(4))])
        provider = load_precomputed(path)
        with pytest.raises(UnknownKey):
            provider.embed_text("E:missing")

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(FormatError):
            PrecomputedEmbedder({"a": np.ones(4), "b": np.ones(5)})

    def test_image_lookup_by_content_hash(self, tmp_path):
        image = b"\x89PNG fake"
        vec = l2_normalize(np.arange(1, 9, dtype=float))
        provider = PrecomputedEmbedder({image_lookup_key(image): vec})
        assert cosine(provider.embed_image(image), vec) == pytest.approx(1.0)


class TestHttpEmbedder:
    def _client(self, handler):
        import httpx

        return httpx.Client(transport=httpx.MockTransport(handler))

    def test_posts_contract_and_normalizes(self):
        import httpx

        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            import json

            seen.update(json.loads(request.content))
            return httpx.Response(200, json={"embedding": [3.0, 4.0]})

        embedder = HttpEmbedder("http://enc/embed", dim=2, client=self._client(handler))
        vec = embedder.embed_text("hello")
        assert seen == {"kind": "text", "payload": "hello"}
        assert np.allclose(vec, [0.6, 0.8])

    def test_error_wrapped(self):
        import httpx

        def handler(request):
            return httpx.Response(500)

        embedder = HttpEmbedder("http://enc/embed", dim=2, client=self._client(handler))
        with pytest.raises(AdapterError):
            embedder.embed_text("hello")
