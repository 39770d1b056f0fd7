"""Replay the calibration table and report achieved vs. target sparsity.

Operating points with closed-form accounting (fixed budgets, densest
vertical-slash packing) are checked arithmetically.  Coverage-driven
flexprefill points depend on the attention distribution, so those are built
on synthetic inputs and measured.  Lengths above --max-len are skipped by
default to keep the run fast; pass --full to sweep the whole table.
"""

from __future__ import annotations

import argparse

from sparselab.patterns import (
    METHOD_NAMES,
    build_plan,
    calibration_entries,
    plan_sparsity,
    predicted_sparsity,
)
from sparselab.synthetic import make_inputs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--methods", nargs="+", default=list(METHOD_NAMES))
    parser.add_argument("--max-len", type=int, default=16384)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--full", action="store_true", help="include lengths above --max-len")
    args = parser.parse_args()

    worst = 0.0
    print(f"{'method':<16}{'seq_len':>8}{'target':>9}{'achieved':>10}{'error':>9}  source")
    for method in args.methods:
        for entry in calibration_entries(method):
            if entry.seq_len > args.max_len and not args.full:
                continue
            report = predicted_sparsity(entry)
            source = "arithmetic"
            if report is None:
                inputs = make_inputs("clustered", entry.seq_len, seed=args.seed)
                plan = build_plan(entry, inputs)
                report = plan_sparsity(plan, target_sparsity=entry.target_sparsity)
                source = "measured"
            err = abs(report.achieved_sparsity - entry.target_sparsity)
            worst = max(worst, err)
            flag = "" if err <= 0.03 else "  <-- off"
            print(
                f"{method:<16}{entry.seq_len:>8}{entry.target_sparsity:>9.4f}"
                f"{report.achieved_sparsity:>10.4f}{err:>9.4f}  {source}{flag}"
            )
    print(f"\nworst |achieved - target| = {worst:.4f}")


if __name__ == "__main__":
    main()
