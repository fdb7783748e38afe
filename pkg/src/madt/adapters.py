"""External-service seams: context scorer, query decomposer, image search.

Every interface ships two implementations selected purely by configuration:
a deterministic offline stub and a generic HTTP adapter speaking a minimal
JSON contract, so any LLM or search backend can be bridged without engine
changes. Stubs are pure functions of their inputs plus static fixture state.
"""
from __future__ import annotations

import base64
import re
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

from .errors import AdapterError, DecompositionFailed, FixtureMissing, ScorerUnavailable
from .metadata import SegmentMeta
from .model import DecomposedQuery
from .text import tokenize

DEFAULT_TIMEOUT_S = 10.0
DEFAULT_MAX_INFLIGHT = 4

#: Ordered-connective markers that delimit event clauses in a raw query.
DEFAULT_EVENT_MARKERS = ("then", "after that", "next", ";")

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".gif", ".webp", ".bin")


@runtime_checkable
class ContextScorer(Protocol):
    def score(self, meta: SegmentMeta, context: str, events: Sequence[str]) -> int: ...


@runtime_checkable
class QueryDecomposer(Protocol):
    def decompose(self, raw: str) -> DecomposedQuery: ...


@runtime_checkable
class ImageSearchClient(Protocol):
    def search(self, text: str, k: int) -> list[tuple[bytes, str]]: ...


class StubContextScorer:
    """Token-overlap heuristic standing in for an LLM coherence judge.

    score = round(100 * |T(meta) ∩ T(query)| / max(1, |T(query)|)) where T
    tokenizes the boundary captions plus speech on the metadata side and the
    context plus all event texts on the query side.
    """

    def score(self, meta: SegmentMeta, context: str, events: Sequence[str]) -> int:
        query_tokens = set(tokenize(context))
        for event in events:
            query_tokens.update(tokenize(event))
        meta_tokens = set(tokenize(meta.caption_start))
        meta_tokens.update(tokenize(meta.caption_end))
        meta_tokens.update(tokenize(meta.speech))
        return round(100 * len(meta_tokens & query_tokens) / max(1, len(query_tokens)))


class RuleDecomposer:
    """Marker-based offline fallback for the LLM decomposition path.

    Text before the first ":" becomes the context; the remainder splits into
    ordered event clauses on connective markers and numbered prefixes.
    """

    def __init__(self, markers: Sequence[str] = DEFAULT_EVENT_MARKERS):
        parts = []
        for marker in markers:
            if marker.strip().isalpha() or " " in marker.strip():
                parts.append(r"\b" + re.escape(marker.strip()) + r"\b")
            else:
                parts.append(re.escape(marker))
        parts.append(r"(?:(?<=\s)|^)\d+[.)]\s*")
        self._splitter = re.compile("|".join(parts), re.IGNORECASE)

    def decompose(self, raw: str) -> DecomposedQuery:
        text = raw.strip()
        if not text:
            raise DecompositionFailed("blank query")
        context, sep, rest = text.partition(":")
        if not sep:
            context, rest = "", text
        clauses = [c.strip(" \t,.") for c in self._splitter.split(rest)]
        events = tuple(c for c in clauses if c)
        if not events:
            raise DecompositionFailed(f"no event clauses in {raw!r}")
        return DecomposedQuery(context=context.strip(), events=events)


class FixtureImageSearch:
    """Deterministic image lookup from a directory of per-token fixtures.

    Layout: ``<fixture_dir>/<token>/<image files>``. A query matches the
    union of its tokens' directories; results are ordered by relative path
    so the same query always returns the same images.
    """

    def __init__(self, fixture_dir: str | Path | None):
        if fixture_dir is None:
            raise FixtureMissing("no image fixture directory configured")
        self._dir = Path(fixture_dir)
        if not self._dir.is_dir():
            raise FixtureMissing(f"image fixture directory missing: {self._dir}")

    def search(self, text: str, k: int) -> list[tuple[bytes, str]]:
        paths: set[Path] = set()
        for token in tokenize(text):
            token_dir = self._dir / token
            if token_dir.is_dir():
                paths.update(
                    p for p in token_dir.iterdir()
                    if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
                )
        ordered = sorted(paths, key=lambda p: str(p.relative_to(self._dir)))[: max(0, k)]
        return [(p.read_bytes(), f"fixture://{p.relative_to(self._dir)}") for p in ordered]


# -- generic HTTP adapters ---------------------------------------------------


def _http_client(timeout_s: float, client):
    if client is not None:
        return client
    import httpx

    return httpx.Client(timeout=timeout_s)


def _post_json(client, url: str, payload: dict) -> dict:
    import httpx

    try:
        resp = client.post(url, json=payload)
        resp.raise_for_status()
        body = resp.json()
    except (httpx.HTTPError, ValueError) as exc:
        raise AdapterError(f"POST {url} failed: {exc}") from exc
    if not isinstance(body, dict):
        raise AdapterError(f"POST {url}: expected a JSON object, got {type(body).__name__}")
    return body


class HttpContextScorer:
    """POST {"meta": {...}, "context": "...", "events": [...]} -> {"score": 0-100}."""

    def __init__(self, url: str, timeout_s: float = DEFAULT_TIMEOUT_S, client=None):
        self._url = url
        self._client = _http_client(timeout_s, client)

    def score(self, meta: SegmentMeta, context: str, events: Sequence[str]) -> int:
        try:
            body = _post_json(
                self._client,
                self._url,
                {"meta": meta.as_dict(), "context": context, "events": list(events)},
            )
            return int(body["score"])
        except (AdapterError, KeyError, TypeError, ValueError) as exc:
            raise ScorerUnavailable(str(exc)) from exc


class HttpQueryDecomposer:
    """POST {"query": "..."} -> {"context": "...", "events": [...]}."""

    def __init__(self, url: str, timeout_s: float = DEFAULT_TIMEOUT_S, client=None):
        self._url = url
        self._client = _http_client(timeout_s, client)

    def decompose(self, raw: str) -> DecomposedQuery:
        try:
            body = _post_json(self._client, self._url, {"query": raw})
            events = tuple(str(e) for e in body["events"])
            return DecomposedQuery(context=str(body.get("context", "")), events=events)
        except (AdapterError, KeyError, TypeError, ValueError) as exc:
            raise DecompositionFailed(str(exc)) from exc


class HttpImageSearch:
    """POST {"query": "...", "k": n} -> {"results": [{"image_b64", "url"}]}."""

    def __init__(self, url: str, timeout_s: float = DEFAULT_TIMEOUT_S, client=None):
        self._url = url
        self._client = _http_client(timeout_s, client)

    def search(self, text: str, k: int) -> list[tuple[bytes, str]]:
        body = _post_json(self._client, self._url, {"query": text, "k": k})
        results = []
        try:
            for item in body["results"][: max(0, k)]:
                results.append((base64.b64decode(item["image_b64"]), str(item.get("url", ""))))
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterError(f"malformed image search response: {exc}") from exc
        return results
