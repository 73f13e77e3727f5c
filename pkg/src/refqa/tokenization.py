"""Tokenization and stopword handling shared by retrieval and verification.

Tokens are Unicode-lowercased alphanumeric runs; underscores and all
punctuation act as separators. The stopword list ships as a data file
(one term per line) and can be overridden per index.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list (one term per line, blank lines ignored)."""
    if path is None:
        return _default_stopwords()
    raw = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in raw.splitlines() if line.strip())


@lru_cache(maxsize=1)
def _default_stopwords() -> frozenset[str]:
    raw = resources.files("refqa.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(line.strip().lower() for line in raw.splitlines() if line.strip())


def content_words(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Tokens with stopwords removed; order and duplicates preserved."""
    stop = stopwords if stopwords is not None else _default_stopwords()
    return [t for t in tokenize(text) if t not in stop]
