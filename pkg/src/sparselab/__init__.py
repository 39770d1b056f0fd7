"""sparselab: a desk-scale laboratory for training-free sparse attention.

Exact grouped-query attention on CPU-sized tensors, six sparse selection
methods with calibrated budgets, an analytical FLOP/memory cost model,
procedurally generated long-context benchmark tasks, metrics, and a
resumable experiment harness.
"""

from . import attention, costs, evaluation, harness, patterns, synthetic, tasks

__all__ = [
    "attention",
    "costs",
    "evaluation",
    "harness",
    "patterns",
    "synthetic",
    "tasks",
]

__version__ = "0.1.0"
