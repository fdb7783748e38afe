"""Deterministic demo corpus: a tiny multi-video story for offline runs.

The corpus has four videos of scripted scenes (a football match, a news
report, a street parade, a cooking show), stub embeddings derived from each
scene description, captions/OCR/objects, per-video ASR, and a couple of
planted near-duplicates so dedup has something to do.

Usage: ``python -m madt.demo --out demo-corpus`` or call
:func:`write_demo_inputs` / :func:`build_demo_corpus` from tests.
"""
from __future__ import annotations

import json
from pathlib import Path

from .embedding import StubEmbedder
from .ingest import IngestConfig, ingest_corpus
from .kfe import write_kfe

DEMO_DIM = 64
DEMO_SEED = 7

# (video, frame_index, timestamp_s, caption, ocr, objects)
_SCENES: list[tuple[str, int, float, str, str, list[str]]] = [
    ("V0001", 0, 0.0, "players warming up on the pitch", "", ["person", "ball"]),
    ("V0001", 10, 4.0, "referee blows the whistle for kickoff", "LIVE", ["person", "whistle"]),
    ("V0001", 20, 8.0, "player kicks the ball forward", "LIVE", ["person", "ball"]),
    ("V0001", 30, 12.0, "striker shoots and scores a goal", "GOAL", ["person", "ball", "net"]),
    ("V0001", 40, 16.0, "crowd celebration in the stands", "GOAL", ["person", "flag"]),
    ("V0001", 50, 20.0, "team huddle after the goal", "", ["person"]),
    ("V0002", 0, 0.0, "news anchor at the studio desk", "BREAKING NEWS", ["person", "desk"]),
    ("V0002", 12, 5.0, "reporter standing on the bridge", "NHAT TAN", ["person", "bridge"]),
    ("V0002", 24, 10.0, "traffic crossing the bridge at night", "", ["car", "bridge"]),
    ("V0002", 36, 15.0, "fireworks over the river", "", ["fireworks"]),
    ("V0003", 0, 0.0, "marching band leads the parade", "", ["person", "drum"]),
    ("V0003", 15, 6.0, "dancers in dragon costume", "", ["person", "dragon"]),
    ("V0003", 30, 12.0, "dancers in dragon costume", "", ["person", "dragon"]),  # near-dup
    ("V0003", 45, 18.0, "confetti falls on the crowd", "", ["person", "confetti"]),
    ("V0004", 0, 0.0, "chef chops vegetables on a board", "", ["person", "knife"]),
    ("V0004", 9, 3.5, "pan sizzles on the stove", "", ["pan", "stove"]),
    ("V0004", 18, 7.0, "chef plates the finished dish", "", ["person", "plate"]),
]

_ASR = {
    "V0001": [
        {"start": 0.0, "end": 6.0, "text": "welcome to the football match"},
        {"start": 6.0, "end": 12.0, "text": "the kickoff and an early attack"},
        {"start": 12.0, "end": 20.0, "text": "what a goal the crowd goes wild"},
    ],
    "V0002": [
        {"start": 0.0, "end": 8.0, "text": "tonight we report from the bridge"},
        {"start": 8.0, "end": 16.0, "text": "fireworks light up the river"},
    ],
    "V0003": [{"start": 0.0, "end": 18.0, "text": "the parade moves through the old quarter"}],
    "V0004": [{"start": 0.0, "end": 8.0, "text": "today we cook a simple dinner"}],
}


def write_demo_inputs(out_dir: Path, dim: int = DEMO_DIM, seed: int = DEMO_SEED) -> tuple[Path, Path]:
    """Write the raw ingest inputs (KFE + JSONL); returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    embedder = StubEmbedder(dim=dim, seed=seed)

    entries = []
    for video, frame, _, caption, _, _ in _SCENES:
        entries.append((f"{video}/{frame:04d}", embedder.embed_text(caption)))
    kfe_path = out_dir / "demo.kfe"
    write_kfe(kfe_path, entries)

    meta_path = out_dir / "demo.jsonl"
    with open(meta_path, "w", encoding="utf-8") as f:
        for video, frame, t, caption, ocr, objects in _SCENES:
            row = {
                "id": f"{video}/{frame:04d}",
                "t": t,
                "caption": caption,
                "ocr": ocr,
                "objects": objects,
            }
            f.write(json.dumps(row) + "\n")
        for video, spans in _ASR.items():
            f.write(json.dumps({"video": video, "asr": spans}) + "\n")
    return kfe_path, meta_path


def build_demo_corpus(corpus_dir: Path, dim: int = DEMO_DIM, seed: int = DEMO_SEED):
    """Ingest the demo inputs into `corpus_dir`; returns (index, store, report)."""
    corpus_dir = Path(corpus_dir)
    inputs_dir = corpus_dir.parent / (corpus_dir.name + "-inputs")
    kfe_path, meta_path = write_demo_inputs(inputs_dir, dim=dim, seed=seed)
    cfg = IngestConfig(embedder_info={"kind": "stub", "seed": seed})
    return ingest_corpus(kfe_path, meta_path, cfg, out_dir=corpus_dir)


def _main() -> None:
    import argparse

    parser = argparse.ArgumentParser(description="Build the bundled demo corpus.")
    parser.add_argument("--out", required=True, help="Corpus directory to create.")
    args = parser.parse_args()
    _, _, report = build_demo_corpus(Path(args.out))
    print(f"demo corpus written to {args.out}: kept {report.kept} of {report.total} keyframes")


if __name__ == "__main__":
    _main()
