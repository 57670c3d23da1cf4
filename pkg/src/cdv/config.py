"""Run configuration: JSON file over dataclass defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .model import CdvHyper
from .spaces import EncoderHyper


@dataclass
class PathsConfig:
    corpus: str = ""
    kb: str = ""
    queries: str = ""
    out: str = "runs/default"


@dataclass
class EmbeddingsConfig:
    dim: int = 32
    window: int = 4
    negatives: int = 5
    epochs: int = 5
    min_count: int = 1
    min_n: int = 3
    max_n: int = 6
    buckets: int = 200_000
    lr: float = 0.025
    include_kb_text: bool = True


@dataclass
class BloomConfig:
    bits: int = 1024
    hashes: int = 5


@dataclass
class EvalConfig:
    candidates: int = 64
    models: list[str] = field(default_factory=lambda: ["cdv", "bm25", "tfidf"])
    dataset: str = "default"
    top_k: int = 10


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080


@dataclass
class Config:
    paths: PathsConfig = field(default_factory=PathsConfig)
    seed: int = 0
    embeddings: EmbeddingsConfig = field(default_factory=EmbeddingsConfig)
    bloom: BloomConfig = field(default_factory=BloomConfig)
    entity_encoder: EncoderHyper = field(default_factory=EncoderHyper)
    aspect_encoder: EncoderHyper = field(default_factory=EncoderHyper)
    cdv: CdvHyper = field(default_factory=CdvHyper)
    eval: EvalConfig = field(default_factory=EvalConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {f.name: f for f in fields(Config)}


def _apply(section_obj, values: dict, section_name: str):
    valid = {f.name for f in fields(section_obj)}
    for key, value in values.items():
        if key not in valid:
            raise ConfigError(f"unknown key {section_name}.{key!r}")
        setattr(section_obj, key, value)


def config_from_dict(data: dict) -> Config:
    cfg = Config()
    for key, value in data.items():
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config section {key!r}")
        if key == "seed":
            cfg.seed = int(value)
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"section {key!r} must be an object")
        _apply(getattr(cfg, key), value, key)
    return cfg


def load_config(path) -> Config:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    return config_from_dict(data)
