"""Benchmark task generation: long-context samples with constructed gold."""

from .base import (
    METRIC_FOR_KIND,
    TASK_KINDS,
    GenerationError,
    TaskSample,
    read_samples,
    write_samples,
)
from .cwe import count_listed_words, gen_cwe
from .niah import gen_niah, scan_pairs
from .prompt import (
    PromptBundle,
    bundle_for,
    format_reference_response,
    question_block,
    question_block_tokens,
    render_prompt,
)
from .qa import assemble_qa, make_demo_documents
from .story import Chapter, StoryWorld, gen_story, scan_world
from .tokenization import DEFAULT_TOKENIZER, ApproxTokenizer, count_tokens
from .vocab import load_words
from .vt import gen_vt, resolve_variables

__all__ = [
    "ApproxTokenizer",
    "Chapter",
    "DEFAULT_TOKENIZER",
    "GenerationError",
    "METRIC_FOR_KIND",
    "PromptBundle",
    "StoryWorld",
    "TASK_KINDS",
    "TaskSample",
    "assemble_qa",
    "bundle_for",
    "count_listed_words",
    "count_tokens",
    "format_reference_response",
    "gen_cwe",
    "gen_niah",
    "gen_story",
    "gen_vt",
    "load_words",
    "make_demo_documents",
    "question_block",
    "question_block_tokens",
    "read_samples",
    "render_prompt",
    "resolve_variables",
    "scan_pairs",
    "scan_world",
    "write_samples",
]


def generate(kind: str, seed: int, target_tokens: int, **kwargs):
    """Dispatch by task kind with each generator's defaults."""
    if kind == "niah":
        return gen_niah(seed, target_tokens=target_tokens, **kwargs)
    if kind == "cwe":
        return gen_cwe(seed, target_tokens=target_tokens, **kwargs)
    if kind == "vt":
        return gen_vt(seed, target_tokens=target_tokens, **kwargs)
    if kind in ("story_retrieval", "story_filtering", "story_multihop"):
        return gen_story(seed, kind=kind, target_tokens=target_tokens, **kwargs)
    if kind == "qa":
        docs = kwargs.pop("documents", None) or make_demo_documents(seed=seed)
        index = kwargs.pop("answer_doc_index", 0)
        doc = docs[index]
        return assemble_qa(
            docs, index, doc["question"], doc["answer"],
            target_tokens=target_tokens, seed=seed, **kwargs,
        )
    raise ValueError(f"unknown task kind {kind!r}")


__all__.append("generate")
