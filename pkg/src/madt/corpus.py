"""Corpus directory loading: one immutable snapshot per load.

A corpus directory is produced by ingestion and holds the survivor
embeddings (KFE), an id/timestamp sidecar, the metadata snapshot, and the
dedup report. Loading never mutates the directory, so a running service can
swap to a freshly ingested corpus atomically by replacing its snapshot.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dedup import DedupReport
from .embedding import EmbeddingProvider, HttpEmbedder, StubEmbedder, l2_normalize
from .errors import CorpusError, FormatError, MalformedId
from .index import VectorIndex
from .ingest import (
    CORPUS_INFO_FILE,
    CORPUS_KFE_FILE,
    CORPUS_METADATA_FILE,
    CORPUS_REPORT_FILE,
    _parse_metadata_jsonl,
)
from .kfe import read_kfe
from .metadata import DEFAULT_ASR_WINDOW_S, MetadataStore
from .model import Keyframe, KeyframeId, MetadataRecord, parse_keyframe_id


@dataclass(frozen=True)
class Corpus:
    """One loaded corpus snapshot; read-only after construction."""

    index: VectorIndex
    store: MetadataStore
    info: dict
    path: Path

    @property
    def size(self) -> int:
        return len(self.index)

    def default_embedder(self, dim_fallback_seed: int = 0) -> EmbeddingProvider:
        """Embedder matching how the corpus was built (stub unless configured)."""
        spec = self.info.get("embedder") or {}
        kind = spec.get("kind", "stub")
        if kind == "http":
            return HttpEmbedder(
                url=spec["url"], dim=self.index.dim, timeout_s=float(spec.get("timeout_s", 10.0))
            )
        return StubEmbedder(dim=self.index.dim, seed=int(spec.get("seed", dim_fallback_seed)))


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus directory written by ingestion."""
    path = Path(path)
    info_file = path / CORPUS_INFO_FILE
    if not info_file.is_file():
        raise CorpusError(f"not a corpus directory (missing {CORPUS_INFO_FILE}): {path}")
    info = json.loads(info_file.read_text(encoding="utf-8"))

    try:
        dim, vectors = read_kfe(path / CORPUS_KFE_FILE)
    except (OSError, FormatError) as exc:
        raise CorpusError(f"unreadable corpus embeddings: {exc}") from exc
    if dim != info.get("dim"):
        raise CorpusError(f"sidecar dim {info.get('dim')} != KFE dim {dim}")

    timestamps: dict[KeyframeId, float] = {}
    for row in info.get("keyframes", []):
        try:
            timestamps[parse_keyframe_id(row["id"])] = float(row["t"])
        except (KeyError, TypeError, ValueError, MalformedId) as exc:
            raise CorpusError(f"bad sidecar keyframe row {row!r}: {exc}") from exc

    keyframes: list[Keyframe] = []
    rows: list[np.ndarray] = []
    for key, vec in vectors.items():
        kid = parse_keyframe_id(key)
        if kid not in timestamps:
            raise CorpusError(f"embedding {kid} missing from sidecar")
        keyframes.append(Keyframe(id=kid, timestamp_s=timestamps[kid], embedding_row=len(rows)))
        rows.append(l2_normalize(vec))
    if len(keyframes) != len(timestamps):
        raise CorpusError("sidecar lists keyframes with no embedding")
    matrix = np.stack(rows) if rows else np.zeros((0, dim))
    index = VectorIndex(keyframes, matrix)

    meta = _parse_metadata_jsonl(path / CORPUS_METADATA_FILE)
    records = [
        MetadataRecord(
            keyframe=kid,
            ocr_text=str(rec.get("ocr", "")),
            caption=str(rec.get("caption", "")),
            objects=tuple(str(o) for o in rec.get("objects", [])),
        )
        for kid, rec in meta.records.items()
        if kid in timestamps
    ]
    store = MetadataStore(
        keyframes,
        records,
        video_asr={v: spans for v, spans in meta.video_asr.items()},
        asr_window_s=float(info.get("asr_window_s", DEFAULT_ASR_WINDOW_S)),
    )
    return Corpus(index=index, store=store, info=info, path=path)


def load_dedup_report(path: str | Path) -> dict:
    """Raw dedup report of a corpus directory."""
    report_file = Path(path) / CORPUS_REPORT_FILE
    if not report_file.is_file():
        raise CorpusError(f"no dedup report in {path}")
    return json.loads(report_file.read_text(encoding="utf-8"))


__all__ = ["Corpus", "DedupReport", "load_corpus", "load_dedup_report"]
