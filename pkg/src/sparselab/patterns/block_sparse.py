"""Block-sparse prefill: mean-pooled query/key blocks, top-k key blocks per
query block, with the first key block and the diagonal block always kept."""

from __future__ import annotations

import numpy as np

from ..attention import AttentionInputs
from .accounting import plan_sparsity
from .plans import BlockPlan
from .vertical_slash import CalibrationSearch

__all__ = ["build_block_sparse", "calibrate_block_topk", "pooled_block_logits"]

BLOCK_SIZE = 16


def _pool_blocks(x: np.ndarray, block_size: int) -> np.ndarray:
    """Arithmetic mean over each block of rows; the last block may be short."""
    n, d = x.shape
    nb = -(-n // block_size)
    out = np.empty((nb, d))
    for b in range(nb):
        out[b] = x[b * block_size : (b + 1) * block_size].mean(axis=0)
    return out


def pooled_block_logits(
    inputs: AttentionInputs, head: int, block_size: int = BLOCK_SIZE
) -> np.ndarray:
    """[num_blocks, num_blocks] scaled dot products of pooled queries/keys."""
    g = inputs.group_map[head]
    qp = _pool_blocks(inputs.queries[head], block_size)
    kp = _pool_blocks(inputs.keys[g], block_size)
    return (qp @ kp.T) / np.sqrt(inputs.head_dim)


def build_block_sparse(
    inputs: AttentionInputs,
    top_k_blocks: int,
    block_size: int = BLOCK_SIZE,
) -> BlockPlan:
    """Select ``top_k_blocks`` causal key blocks per query block by pooled
    logit; block 0 and the diagonal block are forced and count toward k.
    Rows with fewer causal blocks than k are clamped."""
    if top_k_blocks < 2:
        raise ValueError("top_k_blocks must be >= 2 (first block plus diagonal)")
    n = inputs.seq_len
    nb = -(-n // block_size)
    clamped = top_k_blocks > nb
    selections = []
    for head in range(inputs.num_q_heads):
        logits = pooled_block_logits(inputs, head, block_size)
        head_sel = []
        for b in range(nb):
            avail = b + 1
            k_eff = min(top_k_blocks, avail)
            forced = {0, b}
            row = logits[b, :avail]
            order = np.lexsort((np.arange(avail), -row))
            picked = sorted(forced)
            for c in order:
                if len(picked) >= k_eff:
                    break
                if int(c) not in forced:
                    picked.append(int(c))
                    forced.add(int(c))
            head_sel.append(np.array(sorted(picked), dtype=np.int64))
        selections.append(tuple(head_sel))
    return BlockPlan(
        selections=tuple(selections),
        block_size=block_size,
        seq_len=n,
        requested_top_k=top_k_blocks,
        clamped=clamped,
    )


def calibrate_block_topk(
    inputs: AttentionInputs,
    target_sparsity: float,
    block_size: int = BLOCK_SIZE,
) -> CalibrationSearch:
    """Smallest k whose achieved sparsity is at or below the target.

    Achieved sparsity is non-increasing in k, so binary search applies.  When
    even the forced-only selection (k = 2) sits below the target, the target
    is unreachable and the minimal k is returned flagged.
    """
    if not 0.0 <= target_sparsity < 1.0:
        raise ValueError("target_sparsity must lie in [0, 1)")
    n = inputs.seq_len
    nb = -(-n // block_size)

    def sparsity(k: int) -> float:
        return plan_sparsity(build_block_sparse(inputs, k, block_size)).achieved_sparsity

    lo, hi = 2, nb
    if sparsity(lo) < target_sparsity:
        return CalibrationSearch(lo, False)
    while lo < hi:
        mid = (lo + hi) // 2
        if sparsity(mid) <= target_sparsity:
            hi = mid
        else:
            lo = mid + 1
    return CalibrationSearch(lo, True)
