"""Multi-event temporal video retrieval over keyframe embeddings.

Library surface: exact cosine k-NN over a keyframe corpus, a filterable
multimodal metadata store, and a temporal alignment engine that retrieves
segments matching an ordered sequence of event descriptions.
"""
from .config import AppConfig, load_config
from .corpus import Corpus, load_corpus, load_dedup_report
from .dedup import DedupInput, DedupReport, dedup
from .embedding import (
    EmbeddingProvider,
    HttpEmbedder,
    PrecomputedEmbedder,
    StubEmbedder,
    load_precomputed,
)
from .index import ScoredHit, VectorIndex, cosine
from .ingest import IngestConfig, ingest_corpus
from .kfe import read_kfe, write_kfe
from .metadata import JoinedHit, MetadataFilter, MetadataStore, SegmentMeta
from .model import (
    AsrSpan,
    CandidateSegment,
    DecomposedQuery,
    EventPath,
    Keyframe,
    KeyframeId,
    MetadataRecord,
    parse_keyframe_id,
    render_keyframe_id,
)
from .phash import hamming64, phash64
from .trake import (
    TrakeConfig,
    TrakeDeps,
    TrakeResult,
    align_events,
    context_score,
    generate_candidates,
    rerank,
    suppress_overlaps,
    trake,
)

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "AsrSpan",
    "CandidateSegment",
    "Corpus",
    "DecomposedQuery",
    "DedupInput",
    "DedupReport",
    "EmbeddingProvider",
    "EventPath",
    "HttpEmbedder",
    "IngestConfig",
    "JoinedHit",
    "Keyframe",
    "KeyframeId",
    "MetadataFilter",
    "MetadataRecord",
    "MetadataStore",
    "PrecomputedEmbedder",
    "ScoredHit",
    "SegmentMeta",
    "StubEmbedder",
    "TrakeConfig",
    "TrakeDeps",
    "TrakeResult",
    "VectorIndex",
    "align_events",
    "context_score",
    "cosine",
    "dedup",
    "generate_candidates",
    "hamming64",
    "ingest_corpus",
    "load_config",
    "load_corpus",
    "load_dedup_report",
    "load_precomputed",
    "parse_keyframe_id",
    "phash64",
    "read_kfe",
    "rerank",
    "render_keyframe_id",
    "suppress_overlaps",
    "trake",
    "write_kfe",
]
