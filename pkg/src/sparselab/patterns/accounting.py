"""Exact coverage accounting and recall measurement for sparse plans.

Sparsity is always 1 - computed_cells / causal_cells with both counts exact.
For prefill plans the denominator is the causal triangle per query head; for
eviction and page plans it is the cached-token count per kv head at the
decode step.
"""

from __future__ import annotations

import numpy as np

from ..attention import AttentionInputs, CellMask, _stable_softmax, dense_weights_head
from .plans import (
    BlockPlan,
    EvictionPlan,
    PagePlan,
    SparsePlan,
    SparsityReport,
    VerticalSlashPlan,
)

__all__ = [
    "plan_sparsity",
    "attention_recall",
    "to_cell_mask",
    "page_plan_rows",
    "vertical_slash_cells",
    "block_plan_cells",
    "block_budget_cells",
]

ORACLE_LIMIT = 2048


def vertical_slash_cells(verticals: np.ndarray, slashes: np.ndarray, n: int) -> int:
    """|union of cells| for one head: verticals contribute n - j cells each,
    slashes n - o each, minus the overlap pairs {(j, o): j + o <= n - 1}."""
    v = np.asarray(verticals, dtype=np.int64)
    s = np.asarray(slashes, dtype=np.int64)
    col_cells = int((n - v).sum())
    slash_cells = int((n - s).sum())
    # cell (j + o, j) belongs to vertical j and slash o when j + o < n
    overlap = int(np.searchsorted(s, n - v, side="left").sum())
    return col_cells + slash_cells - overlap


def block_plan_cells(plan: BlockPlan) -> int:
    """Exact cell count; selection-independent except through block ids."""
    bs, n = plan.block_size, plan.seq_len
    total = 0
    for head in plan.selections:
        for b, blocks in enumerate(head):
            rows = min(bs, n - b * bs)
            for c in blocks.tolist():
                if c == b:
                    total += rows * (rows + 1) // 2
                else:
                    total += rows * min(bs, n - c * bs)
    return total


def block_budget_cells(seq_len: int, top_k_blocks: int, block_size: int = 16) -> int:
    """Cells computed per head at a given block budget, independent of which
    blocks score highest: query block b always selects min(k, b+1) blocks,
    one of them diagonal, and every off-diagonal key block is full width."""
    if top_k_blocks < 2:
        raise ValueError("top_k_blocks must be at least 2")
    num_blocks = -(-seq_len // block_size)
    total = 0
    for b in range(num_blocks):
        rows = min(block_size, seq_len - b * block_size)
        k_eff = min(top_k_blocks, b + 1)
        total += rows * (rows + 1) // 2 + (k_eff - 1) * rows * block_size
    return total


def plan_sparsity(
    plan: SparsePlan, n: int | None = None, target_sparsity: float | None = None
) -> SparsityReport:
    if isinstance(plan, VerticalSlashPlan):
        n = plan.seq_len if n is None else n
        computed = sum(
            vertical_slash_cells(v, s, n) for v, s in zip(plan.verticals, plan.slashes)
        )
        causal = plan.num_heads * n * (n + 1) // 2
    elif isinstance(plan, BlockPlan):
        n = plan.seq_len if n is None else n
        computed = block_plan_cells(plan)
        causal = plan.num_heads * n * (n + 1) // 2
    elif isinstance(plan, EvictionPlan):
        n = plan.seq_len if n is None else n
        computed = sum(plan.kept_counts)
        causal = plan.num_heads * n
    elif isinstance(plan, PagePlan):
        cached = plan.position + 1
        n = cached if n is None else n
        computed = 0
        for pages in plan.selected:
            for p in pages.tolist():
                start, end = plan.index.page_token_range(p, cached)
                computed += max(0, end - start)
        causal = plan.num_heads * cached
    else:
        raise TypeError(f"unsupported plan type {type(plan).__name__}")
    achieved = 1.0 - computed / causal
    return SparsityReport(
        achieved_sparsity=achieved,
        computed_cells=int(computed),
        causal_cells=int(causal),
        target_sparsity=target_sparsity,
    )


def _vs_mask_matrix(verticals: np.ndarray, slashes: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=bool)
    for j in verticals.tolist():
        m[j:, j] = True
    for o in slashes.tolist():
        idx = np.arange(o, n)
        m[idx, idx - o] = True
    return m


def _block_mask_matrix(head_sel: tuple[np.ndarray, ...], bs: int, n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=bool)
    for b, blocks in enumerate(head_sel):
        r0, r1 = b * bs, min((b + 1) * bs, n)
        for c in blocks.tolist():
            c0, c1 = c * bs, min((c + 1) * bs, n)
            m[r0:r1, c0:c1] = True
    return m & np.tril(np.ones((n, n), dtype=bool))


def _plan_mask_matrix(plan: SparsePlan, head: int, group_map: tuple[int, ...]) -> np.ndarray:
    """Boolean cell matrix of one query head's plan (prefill-style plans)."""
    if isinstance(plan, VerticalSlashPlan):
        return _vs_mask_matrix(plan.verticals[head], plan.slashes[head], plan.seq_len)
    if isinstance(plan, BlockPlan):
        return _block_mask_matrix(plan.selections[head], plan.block_size, plan.seq_len)
    if isinstance(plan, EvictionPlan):
        kept = plan.kept[group_map[head]]
        n = plan.seq_len
        m = np.zeros((n, n), dtype=bool)
        m[:, kept] = True
        return m & np.tril(np.ones((n, n), dtype=bool))
    raise TypeError(f"no full-mask view for {type(plan).__name__}")


def to_cell_mask(plan: SparsePlan, group_map: tuple[int, ...] | None = None) -> CellMask:
    """Expand a plan into an explicit per-row mask.

    Vertical-slash and block plans are per query head already; eviction plans
    are per kv head and need a group_map to fan out to query heads.  Page
    plans constrain a single decode row only, so they have no full-mask view
    (use page_plan_rows).
    """
    if isinstance(plan, PagePlan):
        raise TypeError("page plans constrain one decode row; use page_plan_rows")
    if isinstance(plan, EvictionPlan):
        if group_map is None:
            group_map = tuple(range(plan.num_heads))
        heads = len(group_map)
    else:
        heads = plan.num_heads
        group_map = group_map or tuple(range(heads))
    n = plan.seq_len
    rows = []
    for h in range(heads):
        m = _plan_mask_matrix(plan, h, group_map)
        head_rows = [np.flatnonzero(m[i]) for i in range(n)]
        # row 0 of an eviction mask always holds key 0 (forced prefix)
        rows.append(head_rows)
    return CellMask(rows, n)


def page_plan_rows(plan: PagePlan, group_map: tuple[int, ...]) -> list[np.ndarray]:
    """Per query-head permitted token indices for the plan's decode step."""
    cached = plan.position + 1
    per_kv = []
    for pages in plan.selected:
        spans = [
            np.arange(*plan.index.page_token_range(p, cached)) for p in pages.tolist()
        ]
        per_kv.append(np.concatenate(spans) if spans else np.empty(0, dtype=np.int64))
    return [per_kv[g] for g in group_map]


def attention_recall(
    plan: SparsePlan, inputs: AttentionInputs, oracle_limit: int = ORACLE_LIMIT
) -> float:
    """Fraction of dense attention probability mass covered by the plan's
    cells, averaged over the rows the plan constrains and over heads."""
    n = inputs.seq_len
    if n > oracle_limit:
        raise ValueError(f"recall oracle limited to n <= {oracle_limit}, got {n}")
    heads = inputs.num_q_heads
    if isinstance(plan, PagePlan):
        rows = page_plan_rows(plan, inputs.group_map)
        pos = plan.position
        scale = 1.0 / np.sqrt(inputs.head_dim)
        total = 0.0
        for h in range(heads):
            g = inputs.group_map[h]
            logits = (inputs.keys[g][: pos + 1] @ inputs.queries[h][pos]) * scale
            w = _stable_softmax(logits)
            total += float(w[rows[h]].sum())
        return total / heads

    total = 0.0
    for h in range(heads):
        w = dense_weights_head(inputs, h)
        m = _plan_mask_matrix(plan, h, inputs.group_map)
        total += float(w[m].sum()) / n
    return total / heads
