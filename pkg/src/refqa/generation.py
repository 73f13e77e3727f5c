"""Prompt assembly and the text-generation backend seam.

Templates are plain text with ``{abstracts}`` and ``{question}`` slots;
each packed document renders as a ``PUBMED:<id>`` block so the answer
parser can match ids exactly. Context packing is greedy over the hit
ranking under a ``ceil(chars / 4)`` token estimate.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol

import httpx

from .corpus import Corpus, Document
from .errors import (
    BackendError,
    EmptyAnswerError,
    OversizedContextError,
    TransportError,
)
from .retrieval import ScoredHit

DEFAULT_ABSTRACT_FORMAT = "PUBMED:{doc_id}\n{title}\n{abstract}\n"

_LAYOUT_SLOT_RE = re.compile(r"\{(abstracts|question)\}")
_BLOCK_SLOT_RE = re.compile(r"\{(doc_id|title|abstract)\}")


def estimate_tokens(text: str) -> int:
    """Tokenizer-agnostic budget proxy: ceil(characters / 4)."""
    return (len(text) + 3) // 4


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt layout with named slots.

    ``layout`` must contain ``{abstracts}`` and ``{question}`` exactly
    once each; everything else (including the instruction) is literal.
    """

    layout: str
    abstract_format: str = DEFAULT_ABSTRACT_FORMAT

    def __post_init__(self):
        for slot in ("{abstracts}", "{question}"):
            if self.layout.count(slot) != 1:
                raise ValueError(f"template layout must contain {slot} exactly once")

    @property
    def instruction(self) -> str:
        """Literal text preceding the abstracts slot."""
        return self.layout.split("{abstracts}")[0].strip()

    def render_block(self, doc: Document) -> str:
        values = {"doc_id": doc.doc_id, "title": doc.title, "abstract": doc.abstract}
        return _BLOCK_SLOT_RE.sub(lambda m: values[m.group(1)], self.abstract_format)

    def render(self, question: str, docs: list[Document]) -> str:
        if not docs:
            raise ValueError("a prompt needs at least one document")
        blocks = "".join(self.render_block(d) for d in docs)
        values = {"abstracts": blocks, "question": question}
        return _LAYOUT_SLOT_RE.sub(lambda m: values[m.group(1)], self.layout)

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptTemplate":
        return cls(layout=Path(path).read_text(encoding="utf-8"))


def load_template(name: str = "inference") -> PromptTemplate:
    """Load a shipped template: ``inference`` (PUBMED-id references) or
    ``dataset_generation`` (bracket-number references)."""
    resource = resources.files("refqa.data.templates").joinpath(f"{name}.txt")
    try:
        layout = resource.read_text("utf-8")
    except FileNotFoundError:
        raise ValueError(f"unknown template {name!r}") from None
    return PromptTemplate(layout=layout)


@dataclass
class GenerationParams:
    max_new_tokens: int = 1000
    repetition_penalty: float = 1.1
    context_token_budget: int = 8192

    def __post_init__(self):
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be positive")
        if self.repetition_penalty < 1.0:
            raise ValueError("repetition_penalty must be >= 1")
        if self.context_token_budget <= 0:
            raise ValueError("context_token_budget must be positive")


class GenerationBackend(Protocol):
    name: str

    def complete(self, prompt: str, params: GenerationParams) -> str:
        ...


def pack_context(
    hits: list[ScoredHit],
    corpus: Corpus,
    budget: int,
    template: PromptTemplate | None = None,
    question: str = "",
) -> list[Document]:
    """Greedy prefix of ``hits`` whose rendered prompt fits ``budget``.

    The estimate covers the whole prompt: instruction, abstract blocks,
    and the question. Never reorders or skips within the ranking.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if any(
        hits[i].fused_score < hits[i + 1].fused_score for i in range(len(hits) - 1)
    ):
        raise ValueError("hits must be sorted by fused_score descending")
    template = template or load_template()
    docs: list[Document] = []
    for hit in hits:
        doc = corpus.get(hit.doc_id)
        if doc is None:
            raise ValueError(f"hit references unknown doc_id {hit.doc_id!r}")
        docs.append(doc)
    if not docs:
        raise ValueError("no hits to pack")
    base_len = len(
        _LAYOUT_SLOT_RE.sub(
            lambda m: {"abstracts": "", "question": question}[m.group(1)],
            template.layout,
        )
    )
    packed: list[Document] = []
    total = base_len
    for doc in docs:
        total += len(template.render_block(doc))
        if (total + 3) // 4 > budget:
            break
        packed.append(doc)
    if not packed:
        raise OversizedContextError(
            f"best document {docs[0].doc_id} alone exceeds budget {budget}"
        )
    return packed


def build_prompt(
    question: str, docs: list[Document], template: PromptTemplate | None = None
) -> str:
    template = template or load_template()
    return template.render(question, docs)


def generate_answer(
    backend: GenerationBackend,
    prompt: str,
    params: GenerationParams | None = None,
) -> str:
    """Call the backend; returns its output with trailing whitespace trimmed."""
    params = params or GenerationParams()
    if estimate_tokens(prompt) > params.context_token_budget:
        raise OversizedContextError(
            f"prompt estimate {estimate_tokens(prompt)} tokens exceeds "
            f"budget {params.context_token_budget}"
        )
    text = backend.complete(prompt, params).rstrip()
    if not text:
        raise EmptyAnswerError(f"backend {backend.name} returned empty text")
    return text


class ScriptedGenerationBackend:
    """Canned answers for tests and offline runs.

    A plain string always answers with that string; a mapping answers
    with the value of the first key found inside the prompt.
    """

    name = "scripted-generation"

    def __init__(self, script: str | Mapping[str, str]):
        self.script = script
        self.last_params: GenerationParams | None = None

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self.last_params = params
        if isinstance(self.script, str):
            return self.script
        for key, answer in self.script.items():
            if key in prompt:
                return answer
        raise BackendError(self.name, "no script entry matches the prompt")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedGenerationBackend":
        raw = Path(path).read_text(encoding="utf-8")
        try:
            parsed = json.loads(raw)
        except json.JSONDecodeError:
            return cls(raw)
        if isinstance(parsed, dict):
            return cls(parsed)
        return cls(raw)


class RemoteGenerationBackend:
    """HTTP client speaking the generation wire contract:
    ``{prompt, max_new_tokens, repetition_penalty} -> {text}``."""

    def __init__(self, url: str, timeout: float = 120.0, client: httpx.Client | None = None):
        self.url = url
        self.name = f"generation @ {url}"
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, prompt: str, params: GenerationParams) -> str:
        body = {
            "prompt": prompt,
            "max_new_tokens": params.max_new_tokens,
            "repetition_penalty": params.repetition_penalty,
        }
        try:
            response = self._client.post(self.url, json=body)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(self.name, str(exc)) from exc
        payload = response.json()
        if "text" not in payload:
            raise BackendError(self.name, "response missing 'text' field")
        return str(payload["text"])
