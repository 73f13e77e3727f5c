"""Engine configuration: file, environment overrides, backend factories.

Precedence is environment > config file > defaults. Environment keys are
``REFQA_<SECTION>_<KEY>`` (e.g. ``REFQA_RETRIEVAL_K``); the file is YAML
(JSON works too) with one mapping per section.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

import yaml

from .embeddings import HashedTrigramEmbedding, RemoteEmbeddingBackend
from .errors import ConfigError
from .generation import (
    GenerationParams,
    RemoteGenerationBackend,
    ScriptedGenerationBackend,
    load_template,
    PromptTemplate,
)
from .verification import (
    HeuristicNLIBackend,
    RemoteNLIBackend,
    ScriptedNLIBackend,
)

ENV_PREFIX = "REFQA"


@dataclass
class EngineConfig:
    corpus_path: str = ""
    lexical_index_path: str = ""
    vector_index_path: str = ""
    retrieval_k: int = 5
    lexical_weight: float = 0.5
    embedding_backend: str = "stub"
    embedding_dimension: int = 128
    embedding_synonyms_path: str = ""
    generation_backend: str = ""
    generation_template: str = "inference"
    max_new_tokens: int = 1000
    repetition_penalty: float = 1.1
    context_token_budget: int = 8192
    nli_backend: str = "baseline"
    nli_concurrency: int = 4
    nli_retries: int = 2
    support_threshold: float = 0.6
    highlight_k: int = 3
    use_embedding_highlights: bool = False
    feedback_store_path: str = "feedback.jsonl"
    host: str = "127.0.0.1"
    port: int = 8000

    def validate(self) -> None:
        if not self.corpus_path:
            raise ConfigError("corpus path is required")
        if not 0.0 <= self.lexical_weight <= 1.0:
            raise ConfigError("retrieval.lexical_weight must be in [0, 1]")
        for name in (
            "retrieval_k",
            "embedding_dimension",
            "max_new_tokens",
            "context_token_budget",
            "nli_concurrency",
            "highlight_k",
            "port",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.nli_retries < 0:
            raise ConfigError("nli.retries must be >= 0")
        if self.repetition_penalty < 1.0:
            raise ConfigError("generation.repetition_penalty must be >= 1")
        if not 0.0 < self.support_threshold <= 1.0:
            raise ConfigError("verification.support_threshold must be in (0, 1]")

    def generation_params(self) -> GenerationParams:
        return GenerationParams(
            max_new_tokens=self.max_new_tokens,
            repetition_penalty=self.repetition_penalty,
            context_token_budget=self.context_token_budget,
        )


# (section, key) in the config file -> EngineConfig field
_KEY_MAP = {
    ("corpus", ""): "corpus_path",
    ("indexes", "lexical"): "lexical_index_path",
    ("indexes", "vector"): "vector_index_path",
    ("retrieval", "k"): "retrieval_k",
    ("retrieval", "lexical_weight"): "lexical_weight",
    ("embedding", "backend"): "embedding_backend",
    ("embedding", "dimension"): "embedding_dimension",
    ("embedding", "synonyms"): "embedding_synonyms_path",
    ("generation", "backend"): "generation_backend",
    ("generation", "backend_url"): "generation_backend",  # URL-only alias
    ("generation", "template"): "generation_template",
    ("generation", "max_new_tokens"): "max_new_tokens",
    ("generation", "repetition_penalty"): "repetition_penalty",
    ("generation", "context_token_budget"): "context_token_budget",
    ("nli", "backend"): "nli_backend",
    ("nli", "concurrency"): "nli_concurrency",
    ("nli", "retries"): "nli_retries",
    ("verification", "support_threshold"): "support_threshold",
    ("verification", "highlight_k"): "highlight_k",
    ("verification", "use_embedding_highlights"): "use_embedding_highlights",
    ("feedback", "store"): "feedback_store_path",
    ("service", "host"): "host",
    ("service", "port"): "port",
}


def _coerce(value: object, target_type: type) -> object:
    if isinstance(value, target_type):
        return value
    text = str(value)
    if target_type is bool:
        return text.strip().lower() in ("1", "true", "yes", "on")
    return target_type(text)


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> EngineConfig:
    env = os.environ if env is None else env
    config = EngineConfig()
    field_types = {f.name: f.type for f in fields(EngineConfig)}
    type_of = {
        name: {"int": int, "float": float, "bool": bool, "str": str}[
            str(field_types[name]).replace("builtins.", "")
        ]
        for name in field_types
    }

    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must be a mapping")
        base = Path(path).resolve().parent
        for (section, key), field_name in _KEY_MAP.items():
            if key == "":
                value = raw.get(section)
            else:
                value = (raw.get(section) or {}).get(key) if isinstance(raw.get(section), dict) else None
            if value is None:
                continue
            if field_name.endswith("_path") or field_name.endswith("_backend"):
                value = _resolve_path(str(value), base)
            try:
                setattr(config, field_name, _coerce(value, type_of[field_name]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {section}.{key}: {value!r}") from exc

    for (section, key), field_name in _KEY_MAP.items():
        env_key = f"{ENV_PREFIX}_{section}_{key}".upper().rstrip("_")
        if env_key in env:
            try:
                setattr(config, field_name, _coerce(env[env_key], type_of[field_name]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {env_key}") from exc

    config.validate()
    return config


def _resolve_path(value: str, base: Path) -> str:
    # Backend specs like "scripted:answers.txt" resolve their file part
    # relative to the config file, like plain path values.
    if ":" in value and value.split(":", 1)[0] in ("scripted",):
        prefix, filepart = value.split(":", 1)
        return f"{prefix}:{_resolve_path(filepart, base)}"
    if value.startswith(("http://", "https://")) or value in ("stub", "baseline"):
        return value
    candidate = Path(value)
    return str(candidate if candidate.is_absolute() else base / candidate)


def _load_synonyms(path: str) -> dict[str, str]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError(f"synonym table {path} must be a JSON object")
    return {str(k): str(v) for k, v in raw.items()}


def make_embedding_backend(config: EngineConfig):
    spec = config.embedding_backend
    if spec.startswith(("http://", "https://")):
        return RemoteEmbeddingBackend(spec, dimension=config.embedding_dimension)
    if spec == "stub" or spec.startswith("stub:"):
        dimension = config.embedding_dimension
        if spec.startswith("stub:"):
            dimension = int(spec.split(":", 1)[1])
        synonyms = (
            _load_synonyms(config.embedding_synonyms_path)
            if config.embedding_synonyms_path
            else None
        )
        return HashedTrigramEmbedding(dimension=dimension, synonyms=synonyms)
    raise ConfigError(f"unknown embedding backend spec {spec!r}")


def make_generation_backend(config: EngineConfig):
    spec = config.generation_backend
    if not spec:
        raise ConfigError("generation.backend is required")
    if spec.startswith(("http://", "https://")):
        return RemoteGenerationBackend(spec)
    if spec.startswith("scripted:"):
        return ScriptedGenerationBackend.from_file(spec.split(":", 1)[1])
    raise ConfigError(f"unknown generation backend spec {spec!r}")


def make_nli_backend(config: EngineConfig):
    return nli_backend_from_spec(config.nli_backend, config.support_threshold)


def nli_backend_from_spec(spec: str, support_threshold: float = 0.6):
    if spec == "baseline":
        return HeuristicNLIBackend(support_threshold=support_threshold)
    if spec.startswith("scripted:"):
        return ScriptedNLIBackend.from_file(spec.split(":", 1)[1])
    if spec.startswith(("http://", "https://")):
        return RemoteNLIBackend(spec)
    raise ConfigError(f"unknown NLI backend spec {spec!r}")


def make_template(config: EngineConfig) -> PromptTemplate:
    name = config.generation_template
    if name in ("inference", "dataset_generation"):
        return load_template(name)
    return PromptTemplate.from_file(name)
