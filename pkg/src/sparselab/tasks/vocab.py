"""Bundled English-like vocabulary used by the word-count and needle tasks."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

__all__ = ["load_words"]


@lru_cache(maxsize=1)
def load_words() -> tuple[str, ...]:
    text = (
        resources.files("sparselab").joinpath("data/words.txt").read_text("utf-8")
    )
    words = tuple(line for line in text.splitlines() if line)
    if len(words) < 8000:
        raise RuntimeError(f"bundled vocabulary too small: {len(words)} words")
    return words
