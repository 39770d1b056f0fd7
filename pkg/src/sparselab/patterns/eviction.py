"""KV-cache eviction after prefill: uniform per-head budgets and the
adaptive variant that pools the budget across heads.

Both score tokens with exact attention from the last ``approx_window`` query
rows, reduce over the query heads of each kv group (mean for the uniform
variant, max for the adaptive one), then smooth the per-token scores with a
zero-padded 1-d average pool.  The first 4 and most recent 128 tokens are
always kept and count toward the capacity.
"""

from __future__ import annotations

import numpy as np

from ..attention import AttentionInputs, window_weights_head
from .plans import EvictionPlan

__all__ = [
    "FORCED_FIRST",
    "FORCED_RECENT",
    "snapkv_compress",
    "ada_snapkv_compress",
    "smoothed_scores",
]

FORCED_FIRST = 4
FORCED_RECENT = 128


def _avg_pool_1d(scores: np.ndarray, kernel_size: int) -> np.ndarray:
    """Zero-padded moving average dividing by the full kernel size, matching
    the usual pooling convention for eviction scoring."""
    if kernel_size % 2 != 1:
        raise ValueError("kernel_size must be odd")
    kernel = np.ones(kernel_size) / kernel_size
    return np.convolve(scores, kernel, mode="same")


def _group_window_weights(
    inputs: AttentionInputs, kv_head: int, window: int
) -> np.ndarray:
    """[group_heads, window, n] window attention for one kv head's group."""
    rows = []
    for h, g in enumerate(inputs.group_map):
        if g == kv_head:
            rows.append(window_weights_head(inputs, h, window))
    return np.stack(rows)


def smoothed_scores(
    inputs: AttentionInputs,
    kv_head: int,
    approx_window: int,
    kernel_size: int,
    reduce: str,
) -> np.ndarray:
    window = min(approx_window, inputs.seq_len)
    group = _group_window_weights(inputs, kv_head, window)
    if reduce == "mean":
        raw = group.mean(axis=(0, 1))
    elif reduce == "max":
        raw = group.max(axis=(0, 1))
    else:
        raise ValueError(f"unknown reduction {reduce!r}")
    return _avg_pool_1d(raw, kernel_size)


def _forced_indices(n: int) -> np.ndarray:
    first = np.arange(min(FORCED_FIRST, n))
    recent = np.arange(max(0, n - FORCED_RECENT), n)
    return np.union1d(first, recent)


def _validate_capacity(token_capacity: int, n: int) -> bool:
    """Returns True when compression is a no-op (capacity covers the cache)."""
    if token_capacity < FORCED_FIRST + FORCED_RECENT:
        raise ValueError(
            f"token_capacity must be >= {FORCED_FIRST + FORCED_RECENT} to cover forced tokens"
        )
    return token_capacity >= n


def snapkv_compress(
    inputs: AttentionInputs,
    token_capacity: int,
    approx_window: int = 256,
    kernel_size: int = 21,
) -> EvictionPlan:
    """Uniform eviction: each kv head keeps its own top ``token_capacity``
    tokens by smoothed mean window attention (ties to the lower index)."""
    n = inputs.seq_len
    noop = _validate_capacity(token_capacity, n)
    kept = []
    for kv in range(inputs.num_kv_heads):
        if noop:
            kept.append(np.arange(n, dtype=np.int64))
            continue
        scores = smoothed_scores(inputs, kv, approx_window, kernel_size, "mean")
        forced = _forced_indices(n)
        order = np.lexsort((np.arange(n), -scores))
        picked = set(forced.tolist())
        for idx in order:
            if len(picked) >= token_capacity:
                break
            picked.add(int(idx))
        kept.append(np.array(sorted(picked), dtype=np.int64))
    return EvictionPlan(
        kept=tuple(kept),
        token_capacity=token_capacity,
        seq_len=n,
        approx_window=approx_window,
        kernel_size=kernel_size,
        noop=noop,
    )


def ada_snapkv_compress(
    inputs: AttentionInputs,
    token_capacity: int,
    min_head_fraction: float = 0.2,
    approx_window: int = 256,
    kernel_size: int = 21,
) -> EvictionPlan:
    """Adaptive eviction: one pooled budget of num_kv_heads * token_capacity
    slots filled by globally ranked smoothed max window attention, subject to
    a per-head floor of ceil(min_head_fraction * token_capacity) tokens."""
    if not 0.0 <= min_head_fraction <= 1.0:
        raise ValueError("min_head_fraction must lie in [0, 1]")
    n = inputs.seq_len
    noop = _validate_capacity(token_capacity, n)
    num_kv = inputs.num_kv_heads
    if noop:
        kept = tuple(np.arange(n, dtype=np.int64) for _ in range(num_kv))
        return EvictionPlan(
            kept=kept,
            token_capacity=token_capacity,
            seq_len=n,
            approx_window=approx_window,
            kernel_size=kernel_size,
            min_head_fraction=min_head_fraction,
            noop=True,
        )

    forced = _forced_indices(n)
    floor = max(int(np.ceil(min_head_fraction * token_capacity)), forced.size)
    floor = min(floor, n)
    scores = [
        smoothed_scores(inputs, kv, approx_window, kernel_size, "max")
        for kv in range(num_kv)
    ]

    picked: list[set[int]] = []
    pool_scores: list[np.ndarray] = []
    pool_heads: list[np.ndarray] = []
    pool_ids: list[np.ndarray] = []
    for kv in range(num_kv):
        head_set = set(forced.tolist())
        order = np.lexsort((np.arange(n), -scores[kv]))
        # satisfy the per-head floor with the head's own best tokens first
        for idx in order:
            if len(head_set) >= floor:
                break
            head_set.add(int(idx))
        picked.append(head_set)
        rest = np.array([i for i in order.tolist() if i not in head_set], dtype=np.int64)
        pool_scores.append(scores[kv][rest])
        pool_heads.append(np.full(rest.size, kv, dtype=np.int64))
        pool_ids.append(rest)

    total_budget = num_kv * token_capacity
    remaining = total_budget - sum(len(s) for s in picked)
    if remaining > 0:
        flat_scores = np.concatenate(pool_scores)
        flat_heads = np.concatenate(pool_heads)
        flat_ids = np.concatenate(pool_ids)
        order = np.lexsort((flat_ids, flat_heads, -flat_scores))
        for u in order[:remaining]:
            picked[int(flat_heads[u])].add(int(flat_ids[u]))

    kept = tuple(np.array(sorted(s), dtype=np.int64) for s in picked)
    return EvictionPlan(
        kept=kept,
        token_capacity=token_capacity,
        seq_len=n,
        approx_window=approx_window,
        kernel_size=kernel_size,
        min_head_fraction=min_head_fraction,
        noop=False,
    )
