"""Application configuration: file-based (TOML or JSON) with env overrides.

Precedence: built-in defaults < config file < MADT_-prefixed environment
variables (e.g. MADT_ALPHA=0.5, MADT_CORPUS_DIR=/data/corpus).
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib  # py3.11+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .adapters import DEFAULT_MAX_INFLIGHT, DEFAULT_TIMEOUT_S
from .dedup import DEFAULT_COS_THRESHOLD, DEFAULT_PHASH_THRESHOLD
from .errors import MadtError
from .metadata import DEFAULT_ASR_WINDOW_S

ENV_PREFIX = "MADT_"


@dataclass
class AppConfig:
    # corpus + service
    corpus_dir: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8080
    thumbnails_dir: Optional[str] = None
    ui_dir: Optional[str] = None
    session_ttl_s: float = 1800.0
    selection_limit: int = 100

    # retrieval defaults
    tau_s: float = 30.0
    top_m: int = 100
    beam_width: int = 5
    alpha: float = 0.7
    knn_k: int = 500
    w_sim: float = 0.7
    suppress_overlaps: bool = True

    # ingestion defaults
    phash_threshold: int = DEFAULT_PHASH_THRESHOLD
    cos_threshold: float = DEFAULT_COS_THRESHOLD
    asr_window_s: float = DEFAULT_ASR_WINDOW_S

    # embedding
    stub_dim: int = 64
    stub_seed: int = 0
    embed_url: Optional[str] = None

    # adapters (all disabled unless configured)
    scorer_url: Optional[str] = None
    decomposer_url: Optional[str] = None
    image_search_url: Optional[str] = None
    fixture_image_dir: Optional[str] = None
    use_stub_scorer: bool = True
    use_rule_decomposer: bool = True
    max_inflight: int = DEFAULT_MAX_INFLIGHT
    adapter_timeout_s: float = DEFAULT_TIMEOUT_S


def _coerce(value: str, target_type) -> object:
    if target_type is bool:
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise MadtError(f"cannot parse boolean from {value!r}")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def load_config(path: Optional[str | Path] = None, env: Optional[dict] = None) -> AppConfig:
    """Build an AppConfig from an optional file plus environment overrides."""
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise MadtError(f"config file not found: {p}")
        if p.suffix.lower() == ".toml":
            values = tomllib.loads(p.read_text(encoding="utf-8"))
        elif p.suffix.lower() == ".json":
            values = json.loads(p.read_text(encoding="utf-8"))
        else:
            raise MadtError(f"config must be .toml or .json, got: {p.name}")

    fields = {f.name: f for f in dataclasses.fields(AppConfig)}
    unknown = set(values) - set(fields)
    if unknown:
        raise MadtError(f"unknown config keys: {sorted(unknown)}")

    environ = os.environ if env is None else env
    for name, field in fields.items():
        env_key = ENV_PREFIX + name.upper()
        if env_key in environ:
            # Optional[str] fields coerce as plain strings; others by default type.
            default = field.default
            target = type(default) if default is not None else str
            values[name] = _coerce(environ[env_key], target)
    return AppConfig(**values)
