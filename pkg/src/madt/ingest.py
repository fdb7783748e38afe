"""Corpus ingestion: load precomputed embeddings + metadata, dedup, index.

Inputs are a KFE embedding file whose keys are canonical keyframe ids and a
metadata JSONL file with two row shapes:

    {"id": "V0001/0000", "t": 12.5, "ocr": "...", "caption": "...",
     "objects": ["dog"], "phash": "9f3a5c0011aa44ee"}     # per keyframe
    {"video": "V0001", "asr": [{"start": 0, "end": 3, "text": "..."}]}

"t" (timestamp seconds) and "phash" (16 hex digits) are optional; a missing
timestamp falls back to the frame index, a missing hash skips dedup stage 1.
Ingestion is all-or-nothing: the corpus directory is written to a temp
sibling and swapped in only after every file landed.
"""
from __future__ import annotations

import json
import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dedup import DEFAULT_COS_THRESHOLD, DEFAULT_PHASH_THRESHOLD, DedupInput, DedupReport, dedup
from .embedding import l2_normalize
from .errors import DanglingMetadata, DimensionMismatch, FormatError, MalformedId
from .kfe import read_kfe, write_kfe
from .metadata import DEFAULT_ASR_WINDOW_S, MetadataStore
from .model import AsrSpan, Keyframe, KeyframeId, MetadataRecord, parse_keyframe_id
from .index import VectorIndex

CORPUS_INFO_FILE = "corpus.json"
CORPUS_KFE_FILE = "embeddings.kfe"
CORPUS_METADATA_FILE = "metadata.jsonl"
CORPUS_REPORT_FILE = "dedup_report.json"


@dataclass
class IngestConfig:
    dim: Optional[int] = None  # None: take it from the KFE file
    phash_threshold: int = DEFAULT_PHASH_THRESHOLD
    cos_threshold: float = DEFAULT_COS_THRESHOLD
    asr_window_s: float = DEFAULT_ASR_WINDOW_S
    #: recorded so query surfaces can rebuild the matching embedder
    embedder_info: dict = field(default_factory=dict)


@dataclass
class ParsedMetadata:
    records: dict[KeyframeId, dict]
    video_asr: dict[str, list[AsrSpan]]


def _parse_metadata_jsonl(path: str | Path) -> ParsedMetadata:
    records: dict[KeyframeId, dict] = {}
    video_asr: dict[str, list[AsrSpan]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "id" in obj:
                try:
                    kid = parse_keyframe_id(obj["id"])
                except MalformedId as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc
                if kid in records:
                    raise FormatError(f"{path}:{lineno}: duplicate record for {kid}")
                records[kid] = obj
            elif "video" in obj:
                spans = video_asr.setdefault(obj["video"], [])
                for s in obj.get("asr", []):
                    try:
                        spans.append(AsrSpan(float(s["start"]), float(s["end"]), str(s["text"])))
                    except (KeyError, TypeError, ValueError) as exc:
                        raise FormatError(f"{path}:{lineno}: bad ASR span: {exc}") from exc
            else:
                raise FormatError(f"{path}:{lineno}: row is neither a keyframe nor a video record")
    for spans in video_asr.values():
        spans.sort(key=lambda s: (s.start_s, s.end_s))
    return ParsedMetadata(records=records, video_asr=video_asr)


def _parse_phash(value, kid: KeyframeId) -> Optional[int]:
    if value is None:
        return None
    try:
        h = int(str(value), 16)
    except ValueError as exc:
        raise FormatError(f"bad phash for {kid}: {value!r}") from exc
    if not 0 <= h < 2**64:
        raise FormatError(f"phash out of 64-bit range for {kid}: {value!r}")
    return h


def ingest_corpus(
    embeddings_path: str | Path,
    metadata_path: str | Path,
    config: Optional[IngestConfig] = None,
    out_dir: Optional[str | Path] = None,
) -> tuple[VectorIndex, MetadataStore, DedupReport]:
    """Build a deduplicated corpus; optionally persist it to `out_dir`."""
    cfg = config or IngestConfig()
    file_dim, vectors = read_kfe(embeddings_path)
    if cfg.dim is not None and cfg.dim != file_dim:
        raise DimensionMismatch(f"KFE dim {file_dim} != configured dim {cfg.dim}")

    meta = _parse_metadata_jsonl(metadata_path)
    for kid in meta.records:
        if str(kid) not in vectors:
            raise DanglingMetadata(f"metadata references unknown keyframe {kid}")

    entries: list[tuple[KeyframeId, float, Optional[int], np.ndarray]] = []
    for key, vec in vectors.items():
        try:
            kid = parse_keyframe_id(key)
        except MalformedId as exc:
            raise FormatError(f"KFE key is not a canonical keyframe id: {key!r}") from exc
        rec = meta.records.get(kid, {})
        t = float(rec.get("t", kid.frame_index))
        phash = _parse_phash(rec.get("phash"), kid)
        try:
            unit = l2_normalize(vec)
        except ValueError as exc:
            raise FormatError(f"unusable embedding for {kid}: {exc}") from exc
        entries.append((kid, t, phash, unit))

    entries.sort(key=lambda e: (e[0].video, e[1], e[0].frame_index))
    _check_frame_order(entries)

    dedup_inputs = [
        DedupInput(id=kid, timestamp_s=t, phash=h, embedding=v) for kid, t, h, v in entries
    ]
    survivors, report = dedup(dedup_inputs, cfg.phash_threshold, cfg.cos_threshold)

    keyframes = [
        Keyframe(id=s.id, timestamp_s=s.timestamp_s, embedding_row=row)
        for row, s in enumerate(survivors)
    ]
    matrix = (
        np.stack([s.embedding for s in survivors])
        if survivors
        else np.zeros((0, file_dim))
    )
    index = VectorIndex(keyframes, matrix)

    surviving = {kf.id for kf in keyframes}
    records = [
        MetadataRecord(
            keyframe=kid,
            ocr_text=str(rec.get("ocr", "")),
            caption=str(rec.get("caption", "")),
            objects=tuple(str(o) for o in rec.get("objects", [])),
        )
        for kid, rec in meta.records.items()
        if kid in surviving
    ]
    store = MetadataStore(
        keyframes,
        records,
        video_asr={v: spans for v, spans in meta.video_asr.items()},
        asr_window_s=cfg.asr_window_s,
    )

    if out_dir is not None:
        save_corpus(Path(out_dir), index, store, report, cfg)
    return index, store, report


def _check_frame_order(entries) -> None:
    """Within a video, frame_index must strictly increase with timestamp."""
    by_video: dict[str, list[tuple[float, int]]] = {}
    for kid, t, _, _ in entries:
        by_video.setdefault(kid.video, []).append((t, kid.frame_index))
    for video, pairs in by_video.items():
        for (t0, f0), (t1, f1) in zip(pairs, pairs[1:]):
            if t1 <= t0 or f1 <= f0:
                raise FormatError(
                    f"video {video}: frame index must strictly increase with timestamp "
                    f"(frame {f0}@{t0}s vs frame {f1}@{t1}s)"
                )


def save_corpus(
    out_dir: Path,
    index: VectorIndex,
    store: MetadataStore,
    report: DedupReport,
    cfg: IngestConfig,
) -> None:
    """Write the corpus directory atomically (temp sibling + swap)."""
    out_dir = Path(out_dir)
    tmp = out_dir.parent / f"{out_dir.name}.tmp{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        keyframes = index.keyframes
        write_kfe(
            tmp / CORPUS_KFE_FILE,
            ((str(kf.id), index.vector(kf.id).astype(np.float32)) for kf in keyframes),
        )
        info = {
            "dim": index.dim,
            "keyframes": [{"id": str(kf.id), "t": kf.timestamp_s} for kf in keyframes],
            "thresholds": {"phash": cfg.phash_threshold, "cosine": cfg.cos_threshold},
            "asr_window_s": cfg.asr_window_s,
            "embedder": cfg.embedder_info,
        }
        (tmp / CORPUS_INFO_FILE).write_text(json.dumps(info, indent=2), encoding="utf-8")
        store.dump_jsonl(tmp / CORPUS_METADATA_FILE)
        (tmp / CORPUS_REPORT_FILE).write_text(
            json.dumps(report.as_dict(), indent=2), encoding="utf-8"
        )
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if out_dir.exists():
        old = out_dir.parent / f"{out_dir.name}.old{os.getpid()}"
        if old.exists():
            shutil.rmtree(old)
        out_dir.rename(old)
        tmp.rename(out_dir)
        shutil.rmtree(old)
    else:
        tmp.rename(out_dir)
