"""HTTP/JSON service exposing search, temporal retrieval, and browsing.

All endpoints are stateless except the selection box and image-choice
sessions, which live in memory with a TTL. The corpus is held behind a
single snapshot pointer so a re-ingest can swap it atomically while
in-flight queries finish on the old snapshot.
"""
from __future__ import annotations

import base64
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field, model_validator

from .adapters import ContextScorer, ImageSearchClient, QueryDecomposer
from .config import AppConfig
from .corpus import Corpus
from .embedding import EmbeddingProvider
from .errors import (
    AdapterError,
    DecompositionFailed,
    EmptyIndex,
    FixtureMissing,
    MalformedId,
    UnknownVideo,
)
from .metadata import MetadataFilter
from .model import INFEASIBLE, CandidateSegment, DecomposedQuery, KeyframeId, parse_keyframe_id
from .trake import TrakeConfig, TrakeDeps, TrakeResult, trake

_THUMB_SUFFIXES = (".jpg", ".jpeg", ".png", ".webp")


# -- session state -----------------------------------------------------------


@dataclass
class _Expiring:
    expires_at: float


@dataclass
class _Selection(_Expiring):
    items: list[KeyframeId] = field(default_factory=list)


@dataclass
class _ChoiceSet(_Expiring):
    images: list[tuple[bytes, str]] = field(default_factory=list)


@dataclass
class ServiceState:
    """Mutable service-side state; the corpus attribute is the snapshot pointer."""

    corpus: Optional[Corpus]
    config: AppConfig
    embedder: Optional[EmbeddingProvider] = None
    scorer: Optional[ContextScorer] = None
    decomposer: Optional[QueryDecomposer] = None
    image_search: Optional[ImageSearchClient] = None
    clock: Callable[[], float] = time.monotonic
    selections: dict[str, _Selection] = field(default_factory=dict)
    choices: dict[str, _ChoiceSet] = field(default_factory=dict)
    image_keys: dict[str, np.ndarray] = field(default_factory=dict)
    image_key_expiry: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.embedder is None and self.corpus is not None:
            self.embedder = self.corpus.default_embedder()

    def _prune(self) -> None:
        now = self.clock()
        for table in (self.selections, self.choices):
            for key in [k for k, v in table.items() if v.expires_at <= now]:
                del table[key]
        for key in [k for k, t in self.image_key_expiry.items() if t <= now]:
            self.image_key_expiry.pop(key, None)
            self.image_keys.pop(key, None)

    def ttl(self) -> float:
        return self.config.session_ttl_s


# -- request bodies ----------------------------------------------------------


class FilterBody(BaseModel):
    ocr_contains: Optional[list[str]] = None
    caption_contains: Optional[list[str]] = None
    objects_any: Optional[list[str]] = None
    asr_contains: Optional[list[str]] = None
    videos: Optional[list[str]] = None

    def to_filter(self) -> Optional[MetadataFilter]:
        f = MetadataFilter(
            ocr_contains=tuple(self.ocr_contains) if self.ocr_contains else None,
            caption_contains=tuple(self.caption_contains) if self.caption_contains else None,
            objects_any=frozenset(self.objects_any) if self.objects_any else None,
            asr_contains=tuple(self.asr_contains) if self.asr_contains else None,
            videos=frozenset(self.videos) if self.videos else None,
        )
        return f if f.present_clauses else None


class SearchBody(BaseModel):
    mode: Literal["text", "image_ref"] = "text"
    text: Optional[str] = None
    image_key: Optional[str] = None
    filter: Optional[FilterBody] = None
    filter_strict: bool = True
    k: int = Field(default=10, ge=1)
    include_ids: Optional[list[str]] = None
    exclude_ids: Optional[list[str]] = None
    w_sim: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _exactly_one_query(self) -> "SearchBody":
        if self.mode == "text" and (not self.text or self.image_key is not None):
            raise ValueError("text mode requires text and no image_key")
        if self.mode == "image_ref" and (not self.image_key or self.text is not None):
            raise ValueError("image_ref mode requires image_key and no text")
        return self


class ImageSearchBody(BaseModel):
    query: str = Field(min_length=1)
    k: int = Field(default=5, ge=1)


class ImageSelectBody(BaseModel):
    choice_id: str
    choice_index: int


class TrakeBody(BaseModel):
    query: Optional[str] = None
    context: str = ""
    events: list[str] = Field(default_factory=list)
    tau_s: Optional[float] = Field(default=None, gt=0)
    alpha: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    top_m: Optional[int] = Field(default=None, ge=1)
    beam_width: Optional[int] = Field(default=None, ge=1)
    knn_k: Optional[int] = Field(default=None, ge=1)
    suppress_overlaps: Optional[bool] = None


class SelectionBody(BaseModel):
    session: str = Field(min_length=1)
    id: Optional[str] = None


# -- serialization -----------------------------------------------------------


def _thumbnail_info(state: ServiceState, kid: KeyframeId) -> dict:
    base = state.config.thumbnails_dir
    if base:
        stem = Path(base) / kid.video
        for suffix in _THUMB_SUFFIXES:
            if (stem / f"{kid.frame_index:04d}{suffix}").is_file():
                return {"url": f"/thumbnails/{kid.video}/{kid.frame_index}", "placeholder": False}
    return {"url": None, "placeholder": True}


def _hit_json(state: ServiceState, kid: KeyframeId, **scores) -> dict:
    kf = state.corpus.index.keyframe(kid)
    return {
        "id": str(kid),
        "video": kid.video,
        "frame_index": kid.frame_index,
        "t": kf.timestamp_s,
        "thumbnail": _thumbnail_info(state, kid),
        **scores,
    }


def _segment_json(state: ServiceState, seg: CandidateSegment, n_events: int) -> dict:
    infeasible = seg.event_score == INFEASIBLE
    event_raw = None if seg.event_score is None or infeasible else seg.event_score
    return {
        "video": seg.video,
        "start": str(seg.start),
        "end": str(seg.end),
        "start_s": seg.start_s,
        "end_s": seg.end_s,
        "boundary_score": seg.boundary_score,
        "start_score": seg.start_score,
        "end_score": seg.end_score,
        "context_score": seg.context_score,
        "context_unscored": seg.context_unscored,
        "event_score_raw": event_raw,
        "event_score_norm": None if event_raw is None else (event_raw / n_events + 1.0) / 2.0,
        "final_score": None if infeasible else seg.final_score,
        "infeasible": infeasible,
        "best_path": [str(k) for k in seg.best_path.keyframes] if seg.best_path else [],
        "per_event_scores": list(seg.best_path.per_event_scores) if seg.best_path else [],
    }


def _trake_json(state: ServiceState, result: TrakeResult) -> dict:
    return {
        "degenerate": result.degenerate,
        "n_events": result.n_events,
        "segments": [_segment_json(state, s, result.n_events) for s in result.segments],
        "keyframe_hits": [
            _hit_json(state, h.keyframe, score=h.score) for h in result.keyframe_hits
        ],
    }


# -- app ---------------------------------------------------------------------


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="madt", version="0.1.0")
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def _validation_as_400(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": [str(p) for p in err.get("loc", ())], "msg": str(err.get("msg", ""))}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    def corpus() -> Corpus:
        if state.corpus is None:
            raise HTTPException(status_code=409, detail="corpus not loaded")
        return state.corpus

    def parse_id(raw: str) -> KeyframeId:
        try:
            return parse_keyframe_id(raw)
        except MalformedId as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "corpus_size": 0 if state.corpus is None else state.corpus.size,
        }

    @app.post("/search")
    def search(body: SearchBody) -> dict:
        snapshot = corpus()
        state._prune()
        if body.mode == "text":
            query_vec = state.embedder.embed_text(body.text)
        else:
            query_vec = state.image_keys.get(body.image_key)
            if query_vec is None:
                raise HTTPException(status_code=422, detail=f"unknown image_key {body.image_key!r}")

        meta_filter = body.filter.to_filter() if body.filter else None
        exclude = {parse_id(r) for r in body.exclude_ids or []}
        restrict = {parse_id(r) for r in body.include_ids} if body.include_ids else None
        if meta_filter is not None and body.filter_strict:
            restrict = snapshot.store.filter(restrict, meta_filter)
            if not restrict:
                return {"hits": [], "k": body.k}

        w_sim = state.config.w_sim if body.w_sim is None else body.w_sim
        depth = body.k + len(exclude) if meta_filter is None or body.filter_strict else len(snapshot.index)
        try:
            hits = snapshot.index.search(query_vec, k=max(1, depth), restrict=restrict)
        except EmptyIndex as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        joined = snapshot.store.hybrid_join(
            hits, meta_filter, weights=(w_sim, 1.0 - w_sim), strict=body.filter_strict
        )
        kept = [j for j in joined if j.keyframe not in exclude][: body.k]
        return {
            "hits": [
                _hit_json(
                    state,
                    j.keyframe,
                    score=j.similarity,
                    meta_relevance=j.meta_relevance,
                    final=j.final,
                )
                for j in kept
            ],
            "k": body.k,
        }

    @app.post("/image-search")
    def image_search(body: ImageSearchBody) -> dict:
        state._prune()
        if state.image_search is None:
            raise HTTPException(status_code=503, detail="image search adapter not configured")
        try:
            results = state.image_search.search(body.query, body.k)
        except (FixtureMissing, AdapterError) as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        choice_id = f"ch-{secrets.token_hex(8)}"
        state.choices[choice_id] = _ChoiceSet(
            expires_at=state.clock() + state.ttl(), images=list(results)
        )
        return {
            "choice_id": choice_id,
            "candidates": [
                {"index": i, "url": url, "image_b64": base64.b64encode(img).decode("ascii")}
                for i, (img, url) in enumerate(results)
            ],
        }

    @app.post("/image-select")
    def image_select(body: ImageSelectBody) -> dict:
        state._prune()
        choice = state.choices.get(body.choice_id)
        if choice is None:
            raise HTTPException(status_code=410, detail="choice set expired or unknown")
        if not 0 <= body.choice_index < len(choice.images):
            raise HTTPException(status_code=400, detail=f"choice_index out of range: {body.choice_index}")
        image_bytes, url = choice.images[body.choice_index]
        vec = state.embedder.embed_image(image_bytes)
        image_key = f"img-{secrets.token_hex(8)}"
        state.image_keys[image_key] = vec
        state.image_key_expiry[image_key] = state.clock() + state.ttl()
        return {"image_key": image_key, "source_url": url}

    @app.post("/trake")
    def trake_endpoint(body: TrakeBody) -> dict:
        snapshot = corpus()
        cfg = TrakeConfig(
            tau_s=body.tau_s if body.tau_s is not None else state.config.tau_s,
            top_m=body.top_m if body.top_m is not None else state.config.top_m,
            beam_width=body.beam_width if body.beam_width is not None else state.config.beam_width,
            alpha=body.alpha if body.alpha is not None else state.config.alpha,
            knn_k=body.knn_k if body.knn_k is not None else state.config.knn_k,
            suppress_overlaps=(
                body.suppress_overlaps
                if body.suppress_overlaps is not None
                else state.config.suppress_overlaps
            ),
        )
        deps = TrakeDeps(
            index=snapshot.index,
            store=snapshot.store,
            embedder=state.embedder,
            scorer=state.scorer,
            decomposer=state.decomposer,
            max_workers=state.config.max_inflight,
        )
        if body.query:
            if state.decomposer is None:
                raise HTTPException(status_code=503, detail="no query decomposer configured")
            try:
                result = trake(body.query, cfg, deps)
            except DecompositionFailed as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
        else:
            if not body.events:
                raise HTTPException(status_code=400, detail="need at least one event or a raw query")
            try:
                query = DecomposedQuery(context=body.context, events=tuple(body.events))
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            result = trake(query, cfg, deps)
        return _trake_json(state, result)

    @app.get("/videos/{video}/filmstrip")
    def filmstrip(video: str, around: int, span: int = 3) -> dict:
        snapshot = corpus()
        try:
            frames = snapshot.index.video_keyframes(video)
        except UnknownVideo as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        center = next((i for i, kf in enumerate(frames) if kf.id.frame_index == around), None)
        if center is None:
            raise HTTPException(status_code=404, detail=f"no frame {around} in {video}")
        lo = max(0, center - span)
        window = frames[lo : center + span + 1]
        return {
            "video": video,
            "center": str(frames[center].id),
            "frames": [_hit_json(state, kf.id) for kf in window],
        }

    @app.get("/thumbnails/{video}/{frame_index}")
    def thumbnail(video: str, frame_index: int):
        base = state.config.thumbnails_dir
        if base:
            stem = Path(base) / video
            for suffix in _THUMB_SUFFIXES:
                candidate = stem / f"{frame_index:04d}{suffix}"
                if candidate.is_file():
                    return FileResponse(candidate)
        raise HTTPException(status_code=404, detail="no thumbnail")

    # -- selection box -------------------------------------------------------

    def selection(session: str) -> _Selection:
        state._prune()
        box = state.selections.get(session)
        if box is None:
            box = _Selection(expires_at=state.clock() + state.ttl())
            state.selections[session] = box
        box.expires_at = state.clock() + state.ttl()
        return box

    @app.post("/selection/add")
    def selection_add(body: SelectionBody) -> dict:
        corpus()
        if not body.id:
            raise HTTPException(status_code=400, detail="id required")
        kid = parse_id(body.id)
        if state.corpus.index.row_of(kid) is None:
            raise HTTPException(status_code=404, detail=f"unknown keyframe {kid}")
        box = selection(body.session)
        if kid not in box.items:
            if len(box.items) >= state.config.selection_limit:
                raise HTTPException(status_code=409, detail="selection box full")
            box.items.append(kid)
        return {"session": body.session, "items": [str(k) for k in box.items]}

    @app.post("/selection/remove")
    def selection_remove(body: SelectionBody) -> dict:
        if not body.id:
            raise HTTPException(status_code=400, detail="id required")
        kid = parse_id(body.id)
        box = selection(body.session)
        box.items = [k for k in box.items if k != kid]
        return {"session": body.session, "items": [str(k) for k in box.items]}

    @app.post("/selection/clear")
    def selection_clear(body: SelectionBody) -> dict:
        box = selection(body.session)
        box.items = []
        return {"session": body.session, "items": []}

    @app.get("/selection/{session}")
    def selection_get(session: str) -> dict:
        box = selection(session)
        return {"session": session, "items": [str(k) for k in box.items]}

    @app.post("/selection/export")
    def selection_export(body: SelectionBody) -> PlainTextResponse:
        box = selection(body.session)
        lines = ["video,frame_index"]
        lines += [f"{k.video},{k.frame_index}" for k in box.items]
        return PlainTextResponse("\n".join(lines) + "\n", media_type="text/csv")

    if state.config.ui_dir and Path(state.config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=state.config.ui_dir, html=True), name="ui")

    return app


def build_default_adapters(config: AppConfig):
    """Wire scorer / decomposer / image search from configuration."""
    from .adapters import (
        FixtureImageSearch,
        HttpContextScorer,
        HttpImageSearch,
        HttpQueryDecomposer,
        RuleDecomposer,
        StubContextScorer,
    )

    if config.scorer_url:
        scorer = HttpContextScorer(config.scorer_url, timeout_s=config.adapter_timeout_s)
    elif config.use_stub_scorer:
        scorer = StubContextScorer()
    else:
        scorer = None

    if config.decomposer_url:
        decomposer = HttpQueryDecomposer(config.decomposer_url, timeout_s=config.adapter_timeout_s)
    elif config.use_rule_decomposer:
        decomposer = RuleDecomposer()
    else:
        decomposer = None

    image_search = None
    if config.image_search_url:
        image_search = HttpImageSearch(config.image_search_url, timeout_s=config.adapter_timeout_s)
    elif config.fixture_image_dir:
        try:
            image_search = FixtureImageSearch(config.fixture_image_dir)
        except FixtureMissing:
            image_search = None
    return scorer, decomposer, image_search
