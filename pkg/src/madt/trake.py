"""Multi-event temporal retrieval: the four-stage segment search pipeline.

Stage 1 accepts or produces a decomposed query (context + ordered events).
Stage 2 seeds candidate segments from the first event's k-NN hits and picks,
per start keyframe, the best feasible end keyframe for the last event under
the duration constraint 0 < t_end - t_start <= (n-1) * tau. Stage 3 assigns
the interior events by beam search with strictly increasing timestamps and
per-step gaps <= tau. Stage 4 fuses the (normalized) event score with the
context score and reranks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .adapters import ContextScorer, QueryDecomposer
from .embedding import EmbeddingProvider
from .errors import (
    AdapterError,
    DecompositionFailed,
    NoFeasiblePath,
    ScorerUnavailable,
    TooFewEvents,
    UnknownKeyframe,
)
from .index import ScoredHit, VectorIndex
from .metadata import MetadataStore
from .model import (
    INFEASIBLE,
    CandidateSegment,
    DecomposedQuery,
    EventPath,
    KeyframeId,
    build_event_path,
)

#: cache key: (event position, video id) -> keyframe id -> similarity
ScoresCache = dict[tuple[int, str], dict[KeyframeId, float]]


@dataclass(frozen=True)
class TrakeConfig:
    tau_s: float = 30.0  # max gap between consecutive events, seconds
    top_m: int = 100  # candidate segments retained after stage 2
    beam_width: int = 5
    alpha: float = 0.7  # fusion weight: event score vs context score
    knn_k: int = 500  # retrieval depth for first-event seeding
    suppress_overlaps: bool = True

    def __post_init__(self) -> None:
        if self.tau_s <= 0:
            raise ValueError(f"tau_s must be > 0, got {self.tau_s}")
        if self.top_m < 1 or self.beam_width < 1 or self.knn_k < 1:
            raise ValueError("top_m, beam_width, and knn_k must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class TrakeDeps:
    """Everything one query needs; all of it read-only during the query."""

    index: VectorIndex
    store: MetadataStore
    embedder: EmbeddingProvider
    scorer: Optional[ContextScorer] = None
    decomposer: Optional[QueryDecomposer] = None
    max_workers: int = 1


@dataclass(frozen=True)
class TrakeResult:
    segments: tuple[CandidateSegment, ...]
    n_events: int
    degenerate: bool = False
    keyframe_hits: tuple[ScoredHit, ...] = ()


def _segment_sort_key(seg: CandidateSegment):
    return (-seg.boundary_score, seg.start_s, str(seg.start))


def generate_candidates(
    q: DecomposedQuery,
    cfg: TrakeConfig,
    index: VectorIndex,
    embedder: EmbeddingProvider,
    event_vectors: Optional[Sequence[np.ndarray]] = None,
) -> list[CandidateSegment]:
    """Stage 2: boundary-event seeding of candidate segments.

    Each of the first event's top `knn_k` hits becomes a start keyframe;
    within the same video, the feasible end keyframe with the highest
    last-event similarity (ties: earliest timestamp, then id) closes the
    segment. Segments rank by boundary score and truncate to `top_m`.
    """
    n = q.n_events
    if n < 2:
        raise TooFewEvents(f"need >= 2 events to build segments, got {n}")
    if event_vectors is not None:
        first_vec, last_vec = event_vectors[0], event_vectors[-1]
    else:
        first_vec = embedder.embed_text(q.events[0])
        last_vec = embedder.embed_text(q.events[-1])

    max_span = (n - 1) * cfg.tau_s
    hits = index.search(first_vec, k=cfg.knn_k)
    end_scores: dict[str, list[tuple[KeyframeId, float, float]]] = {}

    segments: list[CandidateSegment] = []
    for hit in hits:
        video = hit.keyframe.video
        t_start = index.keyframe(hit.keyframe).timestamp_s
        if video not in end_scores:
            scored = index.scores_for_video(last_vec, video)
            end_scores[video] = [
                (kid, index.keyframe(kid).timestamp_s, score) for kid, score in scored
            ]
        feasible = [
            (kid, t, score)
            for kid, t, score in end_scores[video]
            if 0.0 < t - t_start <= max_span
        ]
        if not feasible:
            continue
        end_id, end_t, end_score = min(feasible, key=lambda e: (-e[2], e[1], str(e[0])))
        segments.append(
            CandidateSegment(
                video=video,
                start=hit.keyframe,
                end=end_id,
                start_s=t_start,
                end_s=end_t,
                boundary_score=hit.score + end_score,
                start_score=hit.score,
                end_score=end_score,
            )
        )
    segments.sort(key=_segment_sort_key)
    return segments[: cfg.top_m]


def context_score(
    segment: CandidateSegment,
    q: DecomposedQuery,
    scorer: ContextScorer,
    store: MetadataStore,
) -> float:
    """Stage 2b: LLM-judged coherence, clamped to [0, 100] and scaled to [0, 1]."""
    meta = store.metadata_for_segment(segment)
    raw = scorer.score(meta, q.context, list(q.events))
    return min(100.0, max(0.0, float(raw))) / 100.0


def align_events(
    segment: CandidateSegment,
    q: DecomposedQuery,
    cfg: TrakeConfig,
    index: VectorIndex,
    embedder: Optional[EmbeddingProvider] = None,
    event_vectors: Optional[Sequence[np.ndarray]] = None,
    scores_cache: Optional[ScoresCache] = None,
) -> tuple[EventPath, float]:
    """Stage 3: beam-search assignment of interior events inside a segment.

    The path is anchored at the segment's endpoints; interior events map to
    keyframes strictly between them with per-step gaps <= tau. At each step
    only the best partial path per ending keyframe is kept (extensions
    depend only on the path's last keyframe, so dominated partials can never
    win), then the beam truncates to the top `beam_width` by score. Returns
    the best complete path and the raw event score, i.e. the sum of all n
    per-event similarities including both boundary terms.
    """
    n = q.n_events
    tau = cfg.tau_s
    t_start, t_end = segment.start_s, segment.end_s
    if n == 2:
        if t_end - t_start > tau:
            raise NoFeasiblePath(f"boundary gap {t_end - t_start:.3f}s exceeds tau")
        path = build_event_path(
            (segment.start, segment.end),
            (segment.start_score, segment.end_score),
            (t_start, t_end),
            tau,
        )
        return path, segment.boundary_score

    if event_vectors is None:
        if embedder is None:
            raise ValueError("align_events needs an embedder or precomputed event vectors")
        event_vectors = [embedder.embed_text(e) for e in q.events]

    interiors = [
        kf for kf in index.video_keyframes(segment.video) if t_start < kf.timestamp_s < t_end
    ]
    if len(interiors) < n - 2:
        raise NoFeasiblePath(
            f"{len(interiors)} interior keyframes for {n - 2} interior events in {segment.video}"
        )
    times = [kf.timestamp_s for kf in interiors]
    cache: ScoresCache = scores_cache if scores_cache is not None else {}
    sim: list[list[float]] = []
    for event_pos in range(1, n - 1):
        key = (event_pos, segment.video)
        video_scores = cache.get(key)
        if video_scores is None:
            video_scores = dict(index.scores_for_video(event_vectors[event_pos], segment.video))
            cache[key] = video_scores
        sim.append([video_scores[kf.id] for kf in interiors])

    # Beam state: (cumulative score, time of last keyframe, interior indices).
    beam: list[tuple[float, float, tuple[int, ...]]] = [(segment.start_score, t_start, ())]
    for step in range(n - 2):
        best_per_end: dict[int, tuple[float, float, tuple[int, ...]]] = {}
        for score, last_t, path in beam:
            for i, t in enumerate(times):
                if t <= last_t:
                    continue
                if t - last_t > tau:
                    break  # times ascend, so later interiors only get farther
                cand = score + sim[step][i]
                cur = best_per_end.get(i)
                if cur is None or cand > cur[0]:
                    best_per_end[i] = (cand, t, path + (i,))
        if not best_per_end:
            raise NoFeasiblePath(f"beam died at interior event {step + 2}")
        ranked = sorted(
            best_per_end.values(), key=lambda s: (-s[0], s[1], str(interiors[s[2][-1]].id))
        )
        beam = ranked[: cfg.beam_width]

    closed = [
        (score + segment.end_score, path)
        for score, last_t, path in beam
        if last_t < t_end and t_end - last_t <= tau
    ]
    if not closed:
        raise NoFeasiblePath("no partial path can reach the end keyframe within tau")
    total, best = min(closed, key=lambda c: (-c[0], tuple(times[i] for i in c[1])))

    keyframes = (segment.start, *(interiors[i].id for i in best), segment.end)
    timestamps = (t_start, *(times[i] for i in best), t_end)
    per_event = (
        segment.start_score,
        *(sim[j][i] for j, i in enumerate(best)),
        segment.end_score,
    )
    return build_event_path(keyframes, per_event, timestamps, tau), total


def event_norm(event_score: float, n_events: int) -> float:
    """Map a raw event score (sum of n cosines) into [0, 1] for fusion."""
    return (event_score / n_events + 1.0) / 2.0


def rerank(
    segments: Sequence[CandidateSegment], cfg: TrakeConfig, n_events: int
) -> TrakeResult:
    """Stage 4: weighted fusion and final ordering.

    final = alpha * event_norm + (1 - alpha) * context. Segments whose
    alignment found no feasible path keep the -inf sentinel and rank below
    every scored segment regardless of alpha.
    """
    fused: list[CandidateSegment] = []
    for seg in segments:
        ctx = seg.context_score if seg.context_score is not None else 0.0
        if seg.event_score is None or seg.event_score == INFEASIBLE:
            fused.append(replace(seg, final_score=INFEASIBLE))
            continue
        final = cfg.alpha * event_norm(seg.event_score, n_events) + (1.0 - cfg.alpha) * ctx
        fused.append(replace(seg, final_score=final))
    fused.sort(key=_rank_key)
    return TrakeResult(segments=tuple(fused), n_events=n_events)


def _rank_key(s: CandidateSegment):
    if s.final_score == INFEASIBLE:
        return (1, 0.0, -(s.context_score or 0.0), s.start_s, str(s.start))
    return (0, -s.final_score, 0.0, s.start_s, str(s.start))


def suppress_overlaps(
    segments: Sequence[CandidateSegment], max_overlap: float = 0.5
) -> list[CandidateSegment]:
    """Collapse same-video segments overlapping more than `max_overlap`.

    Overlap is intersection over the shorter duration; the higher-ranked
    segment wins, so this runs on an already sorted list.
    """
    kept: list[CandidateSegment] = []
    for seg in segments:
        dominated = False
        for other in kept:
            if other.video != seg.video:
                continue
            inter = min(other.end_s, seg.end_s) - max(other.start_s, seg.start_s)
            if inter <= 0:
                continue
            if inter / min(other.duration_s, seg.duration_s) > max_overlap:
                dominated = True
                break
        if not dominated:
            kept.append(seg)
    return kept


def trake(
    q_raw: Union[str, DecomposedQuery], cfg: TrakeConfig, deps: TrakeDeps
) -> TrakeResult:
    """Run the full pipeline for one query.

    Raw strings go through the configured decomposer; structured queries run
    as given. Single-event queries degenerate to plain keyframe retrieval.
    Per-segment failures (unreachable scorer, no feasible path) degrade that
    segment instead of aborting the query.
    """
    if isinstance(q_raw, str):
        if deps.decomposer is None:
            raise DecompositionFailed("raw query given but no decomposer configured")
        q = deps.decomposer.decompose(q_raw)
    else:
        q = q_raw

    if q.n_events == 1:
        hits = deps.index.search(deps.embedder.embed_text(q.events[0]), k=cfg.top_m)
        return TrakeResult(
            segments=(), n_events=1, degenerate=True, keyframe_hits=tuple(hits)
        )

    event_vectors = [deps.embedder.embed_text(e) for e in q.events]
    candidates = generate_candidates(q, cfg, deps.index, deps.embedder, event_vectors)
    scores_cache: ScoresCache = {}

    def process(seg: CandidateSegment) -> CandidateSegment:
        try:
            if deps.scorer is None:
                raise ScorerUnavailable("no context scorer configured")
            ctx = context_score(seg, q, deps.scorer, deps.store)
            seg = replace(seg, context_score=ctx, context_unscored=False)
        except (ScorerUnavailable, AdapterError, UnknownKeyframe):
            seg = replace(seg, context_score=0.0, context_unscored=True)
        try:
            path, score = align_events(
                seg, q, cfg, deps.index, event_vectors=event_vectors, scores_cache=scores_cache
            )
            seg = replace(seg, event_score=score, best_path=path)
        except NoFeasiblePath:
            seg = replace(seg, event_score=INFEASIBLE, best_path=None)
        return seg

    if deps.max_workers > 1:
        with ThreadPoolExecutor(max_workers=deps.max_workers) as pool:
            scored = list(pool.map(process, candidates))
    else:
        scored = [process(c) for c in candidates]

    result = rerank(scored, cfg, q.n_events)
    segments = (
        tuple(suppress_overlaps(result.segments)) if cfg.suppress_overlaps else result.segments
    )
    return TrakeResult(segments=segments, n_events=q.n_events)
