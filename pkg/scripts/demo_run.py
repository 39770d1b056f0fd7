"""End-to-end demo: generate tasks, run the mock adapter, analyze the output.

Runs a small grid (two task kinds, dense plus one sparse method, two sparsity
levels) against the echo adapter, then re-runs the same config to show that
resume skips completed records, and finally prints the aggregate score table.
Use --out to keep the run directory around for inspection.
"""

from __future__ import annotations

import argparse
import tempfile
from pathlib import Path

from sparselab.harness import ExperimentConfig, analyze, run_suite, summary_rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--samples", type=int, default=3)
    parser.add_argument("--target-tokens", type=int, nargs="+", default=[2000, 4000])
    parser.add_argument("--mode", choices=["echo", "empty"], default="echo")
    args = parser.parse_args()

    config = ExperimentConfig(
        tasks=("niah", "cwe"),
        methods=("dense", "quest"),
        sparsity_levels=(0.0, 0.8),
        seq_lengths=tuple(args.target_tokens),
        samples_per_config=args.samples,
        seed=7,
        mock_mode=args.mode,
    )

    out_root = args.out if args.out is not None else Path(tempfile.mkdtemp(prefix="sparselab_"))
    result = run_suite(config, out_root)
    print(f"run dir: {result.run_dir}")
    print(f"first pass: {result.new_records} new records, {result.adapter_calls} adapter calls")

    again = run_suite(config, out_root)
    print(f"second pass: {again.new_records} new records, {again.adapter_calls} adapter calls")

    tables = analyze(result.run_dir)
    print(f"analysis tables: {', '.join(sorted(tables))}")
    print()
    print(f"{'method':<10}{'sparsity':>9}{'seq_len':>9}{'mean':>8}{'se':>8}{'n':>5}")
    for row in summary_rows(result.records):
        print(
            f"{row['method']:<10}{row['sparsity']:>9.2f}{row['seq_len']:>9}"
            f"{row['mean']:>8.3f}{row['std_error']:>8.3f}{row['n']:>5}"
        )


if __name__ == "__main__":
    main()
