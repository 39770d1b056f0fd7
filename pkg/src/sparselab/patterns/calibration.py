"""Bundled budget-to-sparsity operating points.

The shipped table maps (method, sequence length, target sparsity) to the
parameter that realizes it.  Eviction, page, and block budgets translate to
sparsity by pure arithmetic; vertical-slash budgets are checked against the
densest geometric packing.  Rows with seven entries cover only the seven
densest sparsity levels; the block-sparse alignment follows the conservative
largest-count-to-lowest-sparsity pairing and is flagged unverified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any

import numpy as np

from ..attention import AttentionInputs
from .accounting import block_budget_cells, plan_sparsity, vertical_slash_cells
from .block_sparse import build_block_sparse
from .eviction import ada_snapkv_compress, snapkv_compress
from .plans import SparsePlan, SparsityReport
from .quest import quest_plan
from .vertical_slash import (
    FlexPrefillConfig,
    build_flexprefill,
    build_vertical_slash,
    densest_vertical_slash_plan,
)

__all__ = [
    "METHOD_NAMES",
    "CalibrationEntry",
    "calibration_entries",
    "lookup",
    "predicted_sparsity",
    "build_plan",
    "densest_plan",
    "sparsity_check",
]

METHOD_NAMES = (
    "vertical_slash",
    "flexprefill",
    "block_sparse",
    "snapkv",
    "ada_snapkv",
    "quest",
)


@dataclass(frozen=True)
class CalibrationEntry:
    """One operating point: parameters tuned for a target sparsity level."""

    method: str
    seq_len: int
    target_sparsity: float
    params: tuple[tuple[str, float], ...]
    alignment_verified: bool = True

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(f"{self.method} entry has no parameter {name!r}")


@lru_cache(maxsize=1)
def _raw_table() -> dict[str, Any]:
    path = resources.files("sparselab") / "data" / "calibration.json"
    return json.loads(path.read_text())


def _entry_params(method: str, value: Any) -> tuple[tuple[str, float], ...]:
    if method == "vertical_slash":
        return (("num_verticals", float(value)), ("num_slashes", float(value)))
    if method == "flexprefill":
        alpha, min_budget = value
        return (("alpha", float(alpha)), ("min_budget", float(min_budget)))
    if method == "block_sparse":
        return (("top_k_blocks", float(value)),)
    if method in ("snapkv", "ada_snapkv"):
        return (("token_capacity", float(value)),)
    if method == "quest":
        return (("token_budget", float(value)),)
    raise KeyError(f"unknown method {method!r}")


@lru_cache(maxsize=1)
def _all_entries() -> tuple[CalibrationEntry, ...]:
    raw = _raw_table()
    levels = raw["levels"]
    entries = []
    for method, block in raw["methods"].items():
        verified = bool(block["alignment_verified"])
        for length, values in block["rows"].items():
            # shorter rows pair with the densest (leading) sparsity levels
            for level, value in zip(levels, values):
                entries.append(
                    CalibrationEntry(
                        method=method,
                        seq_len=int(length),
                        target_sparsity=float(level),
                        params=_entry_params(method, value),
                        alignment_verified=verified,
                    )
                )
    return tuple(entries)


def calibration_entries(
    method: str | None = None, seq_len: int | None = None
) -> tuple[CalibrationEntry, ...]:
    out = _all_entries()
    if method is not None:
        if method not in METHOD_NAMES:
            raise KeyError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")
        out = tuple(e for e in out if e.method == method)
    if seq_len is not None:
        out = tuple(e for e in out if e.seq_len == seq_len)
    return out


def lookup(method: str, seq_len: int, target_sparsity: float) -> CalibrationEntry:
    """The entry tuned for a sparsity level, matched within 5e-3."""
    candidates = calibration_entries(method, seq_len)
    if not candidates:
        raise KeyError(f"no calibration rows for {method} at length {seq_len}")
    best = min(candidates, key=lambda e: abs(e.target_sparsity - target_sparsity))
    if abs(best.target_sparsity - target_sparsity) > 5e-3:
        have = sorted({e.target_sparsity for e in candidates}, reverse=True)
        raise KeyError(
            f"{method} at length {seq_len} has no entry near sparsity "
            f"{target_sparsity}; available levels: {have}"
        )
    return best


def predicted_sparsity(entry: CalibrationEntry) -> SparsityReport | None:
    """Input-independent sparsity arithmetic for one operating point.

    Vertical-slash uses the densest-packing cell count (the geometric
    maximum coverage, hence minimum sparsity).  Coverage-driven flexprefill
    points (alpha > 0) are input-dependent and return None.
    """
    n = entry.seq_len
    triangle = n * (n + 1) // 2
    if entry.method in ("vertical_slash", "flexprefill"):
        if entry.method == "flexprefill":
            if entry.param("alpha") > 0:
                return None
            k = int(entry.param("min_budget"))
        else:
            k = int(entry.param("num_verticals"))
        computed = vertical_slash_cells(np.arange(k), np.arange(k), n)
        causal = triangle
    elif entry.method == "block_sparse":
        computed = block_budget_cells(n, int(entry.param("top_k_blocks")))
        causal = triangle
    elif entry.method in ("snapkv", "ada_snapkv"):
        computed = int(entry.param("token_capacity"))
        causal = n
    elif entry.method == "quest":
        pages = int(entry.param("token_budget")) // 16
        computed = min(pages * 16, n)
        causal = n
    else:
        raise KeyError(f"unknown method {entry.method!r}")
    return SparsityReport(
        achieved_sparsity=1.0 - computed / causal,
        computed_cells=computed,
        causal_cells=causal,
        target_sparsity=entry.target_sparsity,
    )


def build_plan(entry: CalibrationEntry, inputs: AttentionInputs) -> SparsePlan:
    """Run the method's builder at this operating point."""
    if entry.method == "vertical_slash":
        return build_vertical_slash(
            inputs, int(entry.param("num_verticals")), int(entry.param("num_slashes"))
        )
    if entry.method == "flexprefill":
        mb = int(entry.param("min_budget"))
        cfg = FlexPrefillConfig(
            alpha=float(entry.param("alpha")),
            min_budget=mb,
            fallback_counts=(mb, mb),
        )
        return build_flexprefill(inputs, cfg)
    if entry.method == "block_sparse":
        return build_block_sparse(inputs, int(entry.param("top_k_blocks")))
    if entry.method == "snapkv":
        return snapkv_compress(inputs, int(entry.param("token_capacity")))
    if entry.method == "ada_snapkv":
        return ada_snapkv_compress(inputs, int(entry.param("token_capacity")))
    if entry.method == "quest":
        return quest_plan(inputs, int(entry.param("token_budget")))
    raise KeyError(f"unknown method {entry.method!r}")


def densest_plan(entry: CalibrationEntry, num_heads: int = 1) -> SparsePlan:
    """The maximum-coverage plan for a vertical-slash operating point."""
    if entry.method != "vertical_slash":
        raise TypeError("densest_plan applies to vertical_slash entries only")
    return densest_vertical_slash_plan(
        num_heads,
        entry.seq_len,
        int(entry.param("num_verticals")),
        int(entry.param("num_slashes")),
    )


def sparsity_check(entry: CalibrationEntry) -> SparsityReport | None:
    """predicted_sparsity cross-checked through plan_sparsity where a plan
    can be formed without inputs (vertical_slash via densest packing)."""
    report = predicted_sparsity(entry)
    if report is None or entry.method != "vertical_slash":
        return report
    plan = densest_plan(entry)
    via_plan = plan_sparsity(plan, target_sparsity=entry.target_sparsity)
    if via_plan.computed_cells != report.computed_cells:
        raise AssertionError("densest-plan accounting disagrees with arithmetic")
    return via_plan
