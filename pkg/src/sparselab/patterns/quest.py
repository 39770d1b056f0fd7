"""Page-granular KV selection for decoding.

The cache is split into fixed 16-token pages; each page is summarized by the
elementwise min and max of its key vectors.  A decode query scores a page with
an upper bound on any dot product against its keys, and only the highest
scoring pages are read, the page holding the current token always among them.
"""

from __future__ import annotations

import numpy as np

from ..attention import AttentionInputs, default_group_map
from .plans import PageIndex, PagePlan

__all__ = ["PAGE_SIZE", "quest_index", "quest_select", "quest_plan"]

PAGE_SIZE = 16


def quest_index(keys: np.ndarray, page_size: int = PAGE_SIZE) -> PageIndex:
    """Build per-page min/max key representatives for every kv head.

    keys: [num_kv_heads, seq_len, head_dim].  The final page may be partial.
    """
    if keys.ndim != 3:
        raise ValueError("keys must be [num_kv_heads, seq_len, head_dim]")
    if page_size < 1:
        raise ValueError(f"page_size must be at least 1, got {page_size}")
    num_kv, n, _ = keys.shape
    if n < 1:
        raise ValueError("at least one key required")
    starts = range(0, n, page_size)
    mins = []
    maxs = []
    for g in range(num_kv):
        head = np.asarray(keys[g], dtype=np.float64)
        mins.append(np.stack([head[s : s + page_size].min(axis=0) for s in starts]))
        maxs.append(np.stack([head[s : s + page_size].max(axis=0) for s in starts]))
    return PageIndex(mins=tuple(mins), maxs=tuple(maxs), page_size=page_size, seq_len=n)


def page_upper_bounds(query_row: np.ndarray, mins: np.ndarray, maxs: np.ndarray) -> np.ndarray:
    """Score[page] = sum_d max(q_d * min_d, q_d * max_d).

    For any key k in the page, q . k <= score: each coordinate of q_d * k_d is
    bounded by the larger of q_d * min_d and q_d * max_d regardless of sign.
    """
    lo = mins * query_row[None, :]
    hi = maxs * query_row[None, :]
    return np.maximum(lo, hi).sum(axis=1)


def quest_select(
    index: PageIndex,
    query_rows: np.ndarray,
    token_budget: int,
    *,
    position: int | None = None,
    group_map: tuple[int, ...] | None = None,
) -> PagePlan:
    """Select the highest scoring pages for one decode step.

    query_rows: [num_q_heads, head_dim], the current step's query for every
    query head.  Page scores are max-aggregated over each kv head's query
    group.  floor(token_budget / page_size) pages are kept per kv head, the
    current token's page forced; a budget covering every cached token keeps
    all pages even when the final page is partial.  Ties break toward the
    lower page index.
    """
    p = index.page_size
    if token_budget < p:
        raise ValueError(f"token_budget must be at least one page ({p}), got {token_budget}")
    if query_rows.ndim != 2:
        raise ValueError("query_rows must be [num_q_heads, head_dim]")
    if position is None:
        position = index.seq_len - 1
    if not 0 <= position < index.seq_len:
        raise ValueError(f"position {position} outside cache of length {index.seq_len}")
    num_q = query_rows.shape[0]
    if group_map is None:
        group_map = default_group_map(num_q, index.num_heads)
    if len(group_map) != num_q:
        raise ValueError("group_map must assign every query head")

    current = position // p
    valid = current + 1  # pages whose first token is cached at this step
    num_pick = min(valid, token_budget // p)
    if token_budget >= position + 1:
        num_pick = valid

    selected = []
    for g in range(index.num_heads):
        scores = np.full(valid, -np.inf)
        for h, head_group in enumerate(group_map):
            if head_group != g:
                continue
            bounds = page_upper_bounds(
                np.asarray(query_rows[h], dtype=np.float64),
                index.mins[g][:valid],
                index.maxs[g][:valid],
            )
            scores = np.maximum(scores, bounds)
        order = np.lexsort((np.arange(valid), -scores))
        picked = [current]
        for page in order:
            if len(picked) >= num_pick:
                break
            if page != current:
                picked.append(int(page))
        selected.append(np.array(sorted(picked), dtype=np.int64))
    return PagePlan(index=index, selected=tuple(selected), token_budget=token_budget, position=position)


def quest_plan(
    inputs: AttentionInputs,
    token_budget: int,
    page_size: int = PAGE_SIZE,
    position: int | None = None,
) -> PagePlan:
    """Index the keys and select pages for the query at ``position``."""
    if position is None:
        position = inputs.seq_len - 1
    index = quest_index(np.asarray(inputs.keys), page_size=page_size)
    rows = np.asarray(inputs.queries)[:, position, :]
    return quest_select(
        index, rows, token_budget, position=position, group_map=inputs.group_map
    )
