"""Sparse-pattern builders, plan types, and coverage accounting."""

from .accounting import (
    ORACLE_LIMIT,
    attention_recall,
    block_budget_cells,
    block_plan_cells,
    page_plan_rows,
    plan_sparsity,
    to_cell_mask,
    vertical_slash_cells,
)
from .block_sparse import BLOCK_SIZE, build_block_sparse, calibrate_block_topk
from .calibration import (
    METHOD_NAMES,
    CalibrationEntry,
    build_plan,
    calibration_entries,
    lookup,
    predicted_sparsity,
    sparsity_check,
)
from .eviction import (
    FORCED_FIRST,
    FORCED_RECENT,
    ada_snapkv_compress,
    snapkv_compress,
)
from .plans import (
    BlockPlan,
    EvictionPlan,
    PageIndex,
    PagePlan,
    SparsePlan,
    SparsityReport,
    VerticalSlashPlan,
)
from .quest import PAGE_SIZE, quest_index, quest_plan, quest_select
from .vertical_slash import (
    FORCED_LOCAL,
    FORCED_PREFIX,
    CalibrationSearch,
    FlexPrefillConfig,
    build_flexprefill,
    build_vertical_slash,
    calibrate_vertical_slash,
    densest_vertical_slash_plan,
)

__all__ = [
    "BLOCK_SIZE",
    "ORACLE_LIMIT",
    "FORCED_FIRST",
    "FORCED_LOCAL",
    "FORCED_PREFIX",
    "FORCED_RECENT",
    "METHOD_NAMES",
    "PAGE_SIZE",
    "BlockPlan",
    "CalibrationEntry",
    "CalibrationSearch",
    "EvictionPlan",
    "FlexPrefillConfig",
    "PageIndex",
    "PagePlan",
    "SparsePlan",
    "SparsityReport",
    "VerticalSlashPlan",
    "ada_snapkv_compress",
    "attention_recall",
    "block_budget_cells",
    "block_plan_cells",
    "build_block_sparse",
    "build_flexprefill",
    "build_plan",
    "build_vertical_slash",
    "calibrate_block_topk",
    "calibrate_vertical_slash",
    "calibration_entries",
    "densest_vertical_slash_plan",
    "lookup",
    "page_plan_rows",
    "plan_sparsity",
    "predicted_sparsity",
    "quest_index",
    "quest_plan",
    "quest_select",
    "snapkv_compress",
    "sparsity_check",
    "to_cell_mask",
    "vertical_slash_cells",
]
