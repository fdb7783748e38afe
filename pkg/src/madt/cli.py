"""Command-line surface mirroring the HTTP semantics.

Exit codes: 2 usage errors (click), 3 corpus problems, 4 adapter problems.
Output is JSON (--format json) for machines or aligned tables for humans.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .adapters import RuleDecomposer, StubContextScorer
from .config import AppConfig, load_config
from .corpus import Corpus, load_corpus, load_dedup_report
from .errors import (
    AdapterError,
    CorpusError,
    DanglingMetadata,
    DecompositionFailed,
    DimensionMismatch,
    FixtureMissing,
    FormatError,
    MadtError,
    ScorerUnavailable,
)
from .ingest import IngestConfig, ingest_corpus
from .metadata import MetadataFilter
from .model import DecomposedQuery
from .trake import TrakeConfig, TrakeDeps, trake

EXIT_CORPUS = 3
EXIT_ADAPTER = 4

_CORPUS_ERRORS = (CorpusError, FormatError, DimensionMismatch, DanglingMetadata, OSError)
_ADAPTER_ERRORS = (AdapterError, ScorerUnavailable, DecompositionFailed, FixtureMissing)


def _fail(code: int, exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _load(corpus_dir: str) -> Corpus:
    try:
        return load_corpus(corpus_dir)
    except _CORPUS_ERRORS as exc:
        _fail(EXIT_CORPUS, exc)


def _emit(rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2, ensure_ascii=False))
        return
    if not rows:
        click.echo("(no results)")
        return
    headers = list(rows[0].keys())
    widths = [max(len(h), *(len(str(r.get(h, ""))) for r in rows)) for h in headers]
    click.echo("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for r in rows:
        click.echo("  ".join(str(r.get(h, "")).ljust(w) for h, w in zip(headers, widths)))


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="TOML or JSON config file.")
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str]) -> None:
    """Multi-event temporal video retrieval engine."""
    try:
        ctx.obj = load_config(config_path)
    except MadtError as exc:
        _fail(EXIT_CORPUS, exc)


@main.command()
@click.option("--embeddings", required=True, type=click.Path(exists=True), help="KFE embedding file.")
@click.option("--metadata", required=True, type=click.Path(exists=True), help="Metadata JSONL file.")
@click.option("--phash-threshold", default=None, type=int, help="Max Hamming bits for stage-1 drop.")
@click.option("--cos-threshold", default=None, type=float, help="Cosine above which stage 2 drops.")
@click.option("--out", required=True, type=click.Path(), help="Corpus directory to write.")
@click.option("--stub-seed", default=None, type=int, help="Record a stub embedder seed for queries.")
@click.pass_obj
def ingest(cfg: AppConfig, embeddings, metadata, phash_threshold, cos_threshold, out, stub_seed):
    """Build a deduplicated corpus directory from precomputed inputs."""
    seed = cfg.stub_seed if stub_seed is None else stub_seed
    icfg = IngestConfig(
        phash_threshold=cfg.phash_threshold if phash_threshold is None else phash_threshold,
        cos_threshold=cfg.cos_threshold if cos_threshold is None else cos_threshold,
        asr_window_s=cfg.asr_window_s,
        embedder_info={"kind": "stub", "seed": seed},
    )
    try:
        index, _, report = ingest_corpus(embeddings, metadata, icfg, out_dir=out)
    except _CORPUS_ERRORS as exc:
        _fail(EXIT_CORPUS, exc)
    click.echo(
        f"ingested {report.total} keyframes -> kept {report.kept} "
        f"(phash -{report.dropped_phash}, cosine -{report.dropped_cosine}) into {out}"
    )


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.pass_obj
def dedup_report(cfg: AppConfig, corpus_dir, fmt):
    """Show the dedup report persisted at ingest time."""
    try:
        report = load_dedup_report(corpus_dir)
    except _CORPUS_ERRORS as exc:
        _fail(EXIT_CORPUS, exc)
    if fmt == "json":
        click.echo(json.dumps(report, indent=2))
    else:
        click.echo(
            f"kept={report['kept']} dropped_phash={report['dropped_phash']} "
            f"dropped_cosine={report['dropped_cosine']}"
        )
        for pair in report.get("drop_pairs", []):
            click.echo(f"  {pair['dropped']} -> {pair['survivor']} ({pair['stage']})")


def _filter_options(fn):
    fn = click.option("--ocr", multiple=True, help="Require OCR tokens.")(fn)
    fn = click.option("--caption", multiple=True, help="Require caption tokens.")(fn)
    fn = click.option("--object", "objects", multiple=True, help="Match any object label.")(fn)
    fn = click.option("--asr", multiple=True, help="Require spoken tokens near the frame.")(fn)
    fn = click.option("--video", "videos", multiple=True, help="Restrict to these videos.")(fn)
    return fn


def _build_filter(ocr, caption, objects, asr, videos) -> Optional[MetadataFilter]:
    f = MetadataFilter(
        ocr_contains=tuple(ocr) or None,
        caption_contains=tuple(caption) or None,
        objects_any=frozenset(objects) or None,
        asr_contains=tuple(asr) or None,
        videos=frozenset(videos) or None,
    )
    return f if f.present_clauses else None


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--text", required=True, help="Query text.")
@click.option("--k", default=10, type=int)
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.option("--soft-filter", is_flag=True, help="Rerank by clause matches instead of dropping.")
@_filter_options
@click.pass_obj
def search(cfg: AppConfig, corpus_dir, text, k, fmt, soft_filter, ocr, caption, objects, asr, videos):
    """Keyframe-level retrieval with optional metadata filtering."""
    corpus = _load(corpus_dir)
    embedder = corpus.default_embedder(dim_fallback_seed=cfg.stub_seed)
    meta_filter = _build_filter(ocr, caption, objects, asr, videos)
    restrict = None
    if meta_filter is not None and not soft_filter:
        restrict = corpus.store.filter(None, meta_filter)
        if not restrict:
            _emit([], fmt)
            return
    depth = k if meta_filter is None or not soft_filter else len(corpus.index)
    try:
        hits = corpus.index.search(embedder.embed_text(text), k=max(1, depth), restrict=restrict)
    except MadtError as exc:
        _fail(EXIT_CORPUS, exc)
    joined = corpus.store.hybrid_join(
        hits, meta_filter, weights=(cfg.w_sim, 1.0 - cfg.w_sim), strict=not soft_filter
    )
    rows = [
        {
            "id": str(j.keyframe),
            "score": round(j.similarity, 6),
            "meta": round(j.meta_relevance, 4),
            "final": round(j.final, 6),
        }
        for j in joined[:k]
    ]
    _emit(rows, fmt)


@main.command(name="trake")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--context", default="", help="Global query context.")
@click.option("--event", "events", multiple=True, help="Ordered event text; repeatable.")
@click.option("--query", default=None, help="Raw query for the rule decomposer.")
@click.option("--tau", "tau_s", default=None, type=float)
@click.option("--alpha", default=None, type=float)
@click.option("--top-m", default=None, type=int)
@click.option("--beam", "beam_width", default=None, type=int)
@click.option("--knn-k", default=None, type=int)
@click.option("--limit", default=10, type=int, help="Segments to print.")
@click.option("--format", "fmt", type=click.Choice(["json", "table"]), default="table")
@click.pass_obj
def trake_cmd(cfg: AppConfig, corpus_dir, context, events, query, tau_s, alpha, top_m, beam_width, knn_k, limit, fmt):
    """Multi-event temporal retrieval over a corpus."""
    corpus = _load(corpus_dir)
    tcfg = TrakeConfig(
        tau_s=cfg.tau_s if tau_s is None else tau_s,
        top_m=cfg.top_m if top_m is None else top_m,
        beam_width=cfg.beam_width if beam_width is None else beam_width,
        alpha=cfg.alpha if alpha is None else alpha,
        knn_k=cfg.knn_k if knn_k is None else knn_k,
        suppress_overlaps=cfg.suppress_overlaps,
    )
    deps = TrakeDeps(
        index=corpus.index,
        store=corpus.store,
        embedder=corpus.default_embedder(dim_fallback_seed=cfg.stub_seed),
        scorer=StubContextScorer(),
        decomposer=RuleDecomposer(),
        max_workers=cfg.max_inflight,
    )
    try:
        if query is not None:
            result = trake(query, tcfg, deps)
        else:
            if not events:
                raise click.UsageError("provide --event at least once, or --query")
            result = trake(DecomposedQuery(context=context, events=tuple(events)), tcfg, deps)
    except _ADAPTER_ERRORS as exc:
        _fail(EXIT_ADAPTER, exc)
    except MadtError as exc:
        _fail(EXIT_CORPUS, exc)

    if result.degenerate:
        rows = [{"id": str(h.keyframe), "score": round(h.score, 6)} for h in result.keyframe_hits[:limit]]
        _emit(rows, fmt)
        return
    rows = []
    for seg in result.segments[:limit]:
        rows.append(
            {
                "video": seg.video,
                "start": str(seg.start),
                "end": str(seg.end),
                "final": None if seg.infeasible else round(seg.final_score, 6),
                "event_raw": None if seg.infeasible else round(seg.event_score, 6),
                "context": None if seg.context_score is None else round(seg.context_score, 4),
                "path": " ".join(str(k) for k in seg.best_path.keyframes) if seg.best_path else "",
            }
        )
    _emit(rows, fmt)


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--port", default=None, type=int)
@click.option("--host", default=None)
@click.option("--ui-dir", default=None, type=click.Path(), help="Static directory for the web UI.")
@click.pass_obj
def serve(cfg: AppConfig, corpus_dir, port, host, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import ServiceState, build_default_adapters, create_app

    corpus = _load(corpus_dir)
    if port is not None:
        cfg.port = port
    if host is not None:
        cfg.host = host
    if ui_dir is not None:
        cfg.ui_dir = ui_dir
    scorer, decomposer, image_search = build_default_adapters(cfg)
    state = ServiceState(
        corpus=corpus,
        config=cfg,
        scorer=scorer,
        decomposer=decomposer,
        image_search=image_search,
    )
    app = create_app(state)
    uvicorn.run(app, host=cfg.host, port=cfg.port)


if __name__ == "__main__":
    main()
