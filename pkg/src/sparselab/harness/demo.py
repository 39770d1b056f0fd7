"""Pattern demos on synthetic inputs: sparsity, recall, and output error."""

from __future__ import annotations

import numpy as np

from ..attention import dense_prefill, decode_step, masked_attention
from ..patterns import (
    FlexPrefillConfig,
    PagePlan,
    ORACLE_LIMIT,
    attention_recall,
    ada_snapkv_compress,
    build_block_sparse,
    build_flexprefill,
    build_vertical_slash,
    calibration_entries,
    lookup,
    page_plan_rows,
    plan_sparsity,
    quest_plan,
    snapkv_compress,
    to_cell_mask,
)
from ..synthetic import GENERATOR_NAMES, make_inputs

__all__ = ["build_method_plan", "plan_demo"]


def build_method_plan(method: str, inputs, params: dict):
    """Direct plan construction from explicit parameters."""
    if method == "vertical_slash":
        return build_vertical_slash(
            inputs,
            num_verticals=params["num_verticals"],
            num_slashes=params["num_slashes"],
            approx_window=params.get("approx_window", 256),
        )
    if method == "flexprefill":
        config = FlexPrefillConfig(
            alpha=params["alpha"],
            min_budget=params.get("min_budget", 512),
            approx_window=params.get("approx_window", 256),
        )
        return build_flexprefill(inputs, config)
    if method == "block_sparse":
        return build_block_sparse(inputs, top_k_blocks=params["top_k_blocks"])
    if method == "snapkv":
        return snapkv_compress(inputs, token_capacity=params["token_capacity"])
    if method == "ada_snapkv":
        return ada_snapkv_compress(
            inputs,
            token_capacity=params["token_capacity"],
            min_head_fraction=params.get("min_head_fraction", 0.2),
        )
    if method == "quest":
        return quest_plan(inputs, token_budget=params["token_budget"])
    raise ValueError(f"unknown method {method!r}")


def plan_demo(
    method: str,
    seq_len: int,
    params: dict | None = None,
    target_sparsity: float | None = None,
    generator: str = "uniform",
    num_q_heads: int = 4,
    num_kv_heads: int = 2,
    head_dim: int = 32,
    seed: int = 0,
    oracle_limit: int = ORACLE_LIMIT,
) -> dict:
    """Builds one plan and reports achieved sparsity, plus recall and output
    approximation error when the sequence is small enough to afford the
    dense oracle.

    Either explicit ``params`` or a calibrated ``target_sparsity`` level must
    be given; the latter resolves parameters from the bundled table.
    """
    if generator not in GENERATOR_NAMES:
        raise ValueError(f"unknown generator {generator!r}")
    inputs = make_inputs(
        generator,
        seq_len=seq_len,
        num_q_heads=num_q_heads,
        num_kv_heads=num_kv_heads,
        head_dim=head_dim,
        seed=seed,
    )
    if params:
        plan = build_method_plan(method, inputs, params)
    elif target_sparsity is not None:
        entry = lookup(method, seq_len, target_sparsity)
        from ..patterns.calibration import build_plan

        plan = build_plan(entry, inputs)
        target_sparsity = entry.target_sparsity
    else:
        raise ValueError("give explicit params or a calibrated target_sparsity")

    report = plan_sparsity(plan, target_sparsity=target_sparsity)
    result = {
        "method": method,
        "generator": generator,
        "seq_len": seq_len,
        "report": report,
        "recall": None,
        "max_output_error": None,
    }
    if seq_len <= oracle_limit:
        result["recall"] = attention_recall(plan, inputs)
        dense = dense_prefill(inputs)
        if isinstance(plan, PagePlan):
            rows = page_plan_rows(plan, inputs.group_map)
            approx = decode_step(inputs, rows)
            error = np.abs(approx.output[:, 0] - dense.output[:, -1]).max()
        else:
            approx = masked_attention(inputs, to_cell_mask(plan, inputs.group_map))
            error = np.abs(approx.output - dense.output).max()
        result["max_output_error"] = float(error)
    return result


def calibration_levels(method: str, seq_len: int) -> list[float]:
    return [entry.target_sparsity for entry in calibration_entries(method, seq_len)]
