"""Filterable multimodal metadata store with an inverted index.

Persists per-keyframe OCR / caption / object labels and per-video ASR spans,
answers clause-based filters, and joins filter relevance with vector hits.
Filter semantics: a keyframe passes iff EVERY present clause passes; token
clauses require ALL their tokens, the objects clause requires ANY label.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import EmptyFilter, UnknownKeyframe
from .index import ScoredHit
from .model import AsrSpan, CandidateSegment, Keyframe, KeyframeId, MetadataRecord
from .text import tokenize

DEFAULT_ASR_WINDOW_S = 15.0


def _normalize_label(label: str) -> str:
    return " ".join(tokenize(label))


@dataclass(frozen=True)
class MetadataFilter:
    """Conjunction of per-modality clauses; at least one must be present."""

    ocr_contains: Optional[tuple[str, ...]] = None
    caption_contains: Optional[tuple[str, ...]] = None
    objects_any: Optional[frozenset[str]] = None
    asr_contains: Optional[tuple[str, ...]] = None
    videos: Optional[frozenset[str]] = None

    @property
    def present_clauses(self) -> list[str]:
        names = ("ocr_contains", "caption_contains", "objects_any", "asr_contains", "videos")
        return [n for n in names if getattr(self, n) is not None]

    def require_nonempty(self) -> None:
        if not self.present_clauses:
            raise EmptyFilter("a metadata filter needs at least one clause")


@dataclass(frozen=True)
class SegmentMeta:
    """Metadata bundle of a candidate segment: boundary captions + speech."""

    caption_start: str
    caption_end: str
    speech: str
    video: str

    def as_dict(self) -> dict[str, str]:
        return {
            "caption_start": self.caption_start,
            "caption_end": self.caption_end,
            "speech": self.speech,
            "video": self.video,
        }


@dataclass(frozen=True)
class JoinedHit:
    """A vector hit enriched with metadata relevance and the fused score."""

    keyframe: KeyframeId
    similarity: float
    meta_relevance: float
    final: float


class MetadataStore:
    """In-memory store with inverted indexes, rebuilt from JSONL at load."""

    def __init__(
        self,
        keyframes: Sequence[Keyframe],
        records: Iterable[MetadataRecord] = (),
        video_asr: Optional[dict[str, Sequence[AsrSpan]]] = None,
        asr_window_s: float = DEFAULT_ASR_WINDOW_S,
    ):
        self._asr_window_s = asr_window_s
        self._timestamps = {kf.id: kf.timestamp_s for kf in keyframes}
        self._video_asr: dict[str, tuple[AsrSpan, ...]] = {}
        for video, spans in (video_asr or {}).items():
            ordered = tuple(sorted(spans, key=lambda s: (s.start_s, s.end_s)))
            self._video_asr[video] = ordered

        self._records: dict[KeyframeId, MetadataRecord] = {}
        for rec in records:
            if rec.keyframe in self._records:
                raise ValueError(f"duplicate metadata record for {rec.keyframe}")
            spans = self._video_asr.get(rec.keyframe.video, ())
            self._records[rec.keyframe] = MetadataRecord(
                keyframe=rec.keyframe,
                ocr_text=rec.ocr_text,
                caption=rec.caption,
                objects=rec.objects,
                asr_spans=spans,
            )

        # Token caches per keyframe, and inverted postings per field.
        self._ocr_tokens: dict[KeyframeId, frozenset[str]] = {}
        self._caption_tokens: dict[KeyframeId, frozenset[str]] = {}
        self._labels: dict[KeyframeId, frozenset[str]] = {}
        self._postings: dict[str, dict[str, list[KeyframeId]]] = {
            "ocr": {},
            "caption": {},
            "objects": {},
        }
        self._asr_postings: dict[str, set[str]] = {}
        self._ids = sorted(self._timestamps, key=lambda kid: (kid.video, kid.frame_index))
        for kid in self._ids:
            rec = self._records.get(kid)
            ocr = frozenset(tokenize(rec.ocr_text)) if rec else frozenset()
            cap = frozenset(tokenize(rec.caption)) if rec else frozenset()
            labels = frozenset(_normalize_label(o) for o in rec.objects) if rec else frozenset()
            self._ocr_tokens[kid] = ocr
            self._caption_tokens[kid] = cap
            self._labels[kid] = labels
            for token in ocr:
                self._postings["ocr"].setdefault(token, []).append(kid)
            for token in cap:
                self._postings["caption"].setdefault(token, []).append(kid)
            for label in labels:
                self._postings["objects"].setdefault(label, []).append(kid)
        for field in self._postings.values():
            for postings in field.values():
                postings.sort(key=lambda kid: str(kid))
        for video, spans in self._video_asr.items():
            for span in spans:
                for token in tokenize(span.text):
                    self._asr_postings.setdefault(token, set()).add(video)

    def __len__(self) -> int:
        return len(self._timestamps)

    @property
    def keyframe_ids(self) -> list[KeyframeId]:
        return list(self._ids)

    def record(self, kid: KeyframeId) -> MetadataRecord:
        if kid not in self._timestamps:
            raise UnknownKeyframe(str(kid))
        return self._records.get(kid) or MetadataRecord(
            keyframe=kid, asr_spans=self._video_asr.get(kid.video, ())
        )

    def asr_spans(self, video: str) -> tuple[AsrSpan, ...]:
        return self._video_asr.get(video, ())

    # -- filtering ---------------------------------------------------------

    def _clause_passes(self, kid: KeyframeId, clause: str, value) -> bool:
        if clause == "videos":
            return kid.video in value
        if clause == "objects_any":
            wanted = {_normalize_label(v) for v in value}
            return bool(wanted & self._labels[kid])
        if clause == "ocr_contains":
            tokens = [t for v in value for t in tokenize(v)]
            return all(t in self._ocr_tokens[kid] for t in tokens)
        if clause == "caption_contains":
            tokens = [t for v in value for t in tokenize(v)]
            return all(t in self._caption_tokens[kid] for t in tokens)
        if clause == "asr_contains":
            return self._asr_clause_passes(kid, value)
        raise ValueError(f"unknown clause {clause}")

    def _asr_clause_passes(self, kid: KeyframeId, value: tuple[str, ...]) -> bool:
        tokens = [t for v in value for t in tokenize(v)]
        if not tokens:
            return True
        t = self._timestamps[kid]
        spans = self._video_asr.get(kid.video, ())
        # A single span containing the keyframe timestamp that holds all tokens...
        for span in spans:
            if span.start_s <= t <= span.end_s:
                span_tokens = set(tokenize(span.text))
                if all(tok in span_tokens for tok in tokens):
                    return True
        # ...or the concatenation of spans within the attachment window.
        lo, hi = t - self._asr_window_s, t + self._asr_window_s
        window_tokens: set[str] = set()
        for span in spans:
            if span.end_s >= lo and span.start_s <= hi:
                window_tokens.update(tokenize(span.text))
        return all(tok in window_tokens for tok in tokens)

    def matched_clauses(self, kid: KeyframeId, f: MetadataFilter) -> int:
        return sum(
            1 for clause in f.present_clauses if self._clause_passes(kid, clause, getattr(f, clause))
        )

    def passes(self, kid: KeyframeId, f: MetadataFilter) -> bool:
        return all(self._clause_passes(kid, c, getattr(f, c)) for c in f.present_clauses)

    def filter(
        self, candidates: Optional[Iterable[KeyframeId]], f: MetadataFilter
    ) -> set[KeyframeId]:
        """Keyframes (from `candidates`, or the whole corpus) passing every clause."""
        f.require_nonempty()
        pool = self._ids if candidates is None else [k for k in candidates if k in self._timestamps]
        # Narrow by the cheapest token clause postings first, then verify fully.
        narrowed = self._narrow(pool, f)
        return {kid for kid in narrowed if self.passes(kid, f)}

    def _narrow(self, pool: Sequence[KeyframeId], f: MetadataFilter) -> Sequence[KeyframeId]:
        candidate_sets: list[set[KeyframeId]] = []
        for field, clause in (("ocr", f.ocr_contains), ("caption", f.caption_contains)):
            if clause is None:
                continue
            tokens = [t for v in clause for t in tokenize(v)]
            if not tokens:
                continue
            postings = [set(self._postings[field].get(t, ())) for t in tokens]
            candidate_sets.append(set.intersection(*postings) if postings else set())
        if f.objects_any is not None:
            wanted = {_normalize_label(v) for v in f.objects_any}
            candidate_sets.append(
                {kid for label in wanted for kid in self._postings["objects"].get(label, ())}
            )
        if not candidate_sets:
            return pool
        allowed = set.intersection(*candidate_sets)
        return [kid for kid in pool if kid in allowed]

    # -- fusion ------------------------------------------------------------

    def hybrid_join(
        self,
        hits: Sequence[ScoredHit],
        f: Optional[MetadataFilter],
        weights: tuple[float, float] = (0.7, 0.3),
        strict: bool = True,
    ) -> list[JoinedHit]:
        """Fuse vector scores with metadata relevance.

        With `strict` (the default) hits failing any clause are dropped, which
        matches the hard-filter join semantics; with strict=False the filter
        acts as a soft reranking signal and meta_relevance is the fraction of
        clauses matched.
        """
        w_sim, w_meta = weights
        if w_sim < 0 or w_meta < 0 or abs(w_sim + w_meta - 1.0) > 1e-9:
            raise ValueError(f"weights must be non-negative and sum to 1: {weights}")
        joined: list[JoinedHit] = []
        for hit in hits:
            if f is None:
                relevance = 0.0
            else:
                f.require_nonempty()
                if hit.keyframe not in self._timestamps:
                    continue
                matched = self.matched_clauses(hit.keyframe, f)
                present = len(f.present_clauses)
                if strict and matched < present:
                    continue
                relevance = matched / present
            final = w_sim * (hit.score + 1.0) / 2.0 + w_meta * relevance
            joined.append(
                JoinedHit(
                    keyframe=hit.keyframe,
                    similarity=hit.score,
                    meta_relevance=relevance,
                    final=final,
                )
            )
        joined.sort(key=lambda j: (-j.final, str(j.keyframe)))
        return joined

    # -- segment metadata ----------------------------------------------------

    def metadata_for_segment(self, segment: CandidateSegment) -> SegmentMeta:
        """Boundary captions plus concatenated speech overlapping the segment."""
        for kid in (segment.start, segment.end):
            if kid not in self._timestamps:
                raise UnknownKeyframe(str(kid))
        start_rec = self.record(segment.start)
        end_rec = self.record(segment.end)
        spans = self._video_asr.get(segment.video, ())
        texts = [
            s.text
            for s in spans
            if s.end_s >= segment.start_s and s.start_s <= segment.end_s and s.text
        ]
        return SegmentMeta(
            caption_start=start_rec.caption,
            caption_end=end_rec.caption,
            speech=" ".join(texts),
            video=segment.video,
        )

    # -- persistence ---------------------------------------------------------

    def dump_jsonl(self, path: str | Path) -> None:
        """Write the snapshot as one JSON object per line (UTF-8)."""
        with open(path, "w", encoding="utf-8") as f:
            for kid in self._ids:
                rec = self._records.get(kid)
                obj = {
                    "id": str(kid),
                    "t": self._timestamps[kid],
                    "ocr": rec.ocr_text if rec else "",
                    "caption": rec.caption if rec else "",
                    "objects": list(rec.objects) if rec else [],
                }
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")
            for video in sorted(self._video_asr):
                obj = {
                    "video": video,
                    "asr": [
                        {"start": s.start_s, "end": s.end_s, "text": s.text}
                        for s in self._video_asr[video]
                    ],
                }
                f.write(json.dumps(obj, ensure_ascii=False) + "\n")
