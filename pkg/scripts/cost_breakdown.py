"""Print where prefill compute and decode memory traffic go as context grows.

Reproduces the headline cost-model numbers: the attention share of prefill
FLOPs for the Qwen dense-attention presets, the best-case speedup from
dropping attention density to 0.2, and the KV-cache share of decode traffic
at several batch sizes.  Everything here is closed-form; the script runs in
well under a second.
"""

from __future__ import annotations

import argparse

from sparselab.costs import (
    decode_memory,
    decode_speedup,
    model_presets,
    prefill_flops,
    prefill_speedup,
    spec_from_preset,
)

QWEN = ("qwen2.5-7b", "qwen2.5-14b", "qwen2.5-32b", "qwen2.5-72b")


def prefill_table(lengths: list[int], density: float) -> None:
    print(f"prefill, density={density:g}")
    print(f"{'model':<14}" + "".join(f"{n:>12}" for n in lengths))
    for name in QWEN:
        shares = []
        for n in lengths:
            rep = prefill_flops(spec_from_preset(name, seq_len=n))
            shares.append(rep.attention_share)
        print(f"{name:<14}" + "".join(f"{s:12.4f}" for s in shares))
    print(f"{'mean share':<14}", end="")
    for i, n in enumerate(lengths):
        col = []
        for name in QWEN:
            rep = prefill_flops(spec_from_preset(name, seq_len=n))
            col.append(rep.attention_share)
        print(f"{sum(col) / len(col):12.4f}", end="")
    print()
    print(f"{'speedup':<14}", end="")
    for n in lengths:
        sp = [prefill_speedup(spec_from_preset(name, seq_len=n), density) for name in QWEN]
        print(f"{sum(sp) / len(sp):12.4f}", end="")
    print("\n")


def decode_table(lengths: list[int], batches: list[int], density: float) -> None:
    print("decode, qwen2.5-7b")
    print(f"{'batch':<14}" + "".join(f"{n:>12}" for n in lengths))
    for b in batches:
        shares = []
        for n in lengths:
            rep = decode_memory(spec_from_preset("qwen2.5-7b", seq_len=n, batch_size=b))
            shares.append(rep.attention_share)
        print(f"{b:<14}" + "".join(f"{s:12.4f}" for s in shares))
    print(f"{'speedup B=1':<14}", end="")
    for n in lengths:
        spec = spec_from_preset("qwen2.5-7b", seq_len=n, density=density)
        print(f"{decode_speedup(spec, density):12.4f}", end="")
    print("\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lengths", type=int, nargs="+", default=[16384, 65536, 128000])
    parser.add_argument("--batches", type=int, nargs="+", default=[1, 8, 64])
    parser.add_argument("--density", type=float, default=0.2)
    args = parser.parse_args()

    print("available presets:", ", ".join(sorted(model_presets())))
    print()
    prefill_table(args.lengths, args.density)
    decode_table(args.lengths, args.batches, args.density)

    # Side-by-side of a standard and a sliding-window architecture.
    print("architecture contrast at 65536 tokens, batch 8")
    for name in ("qwen2.5-14b", "gemma3-12b"):
        spec = spec_from_preset(name, seq_len=65536, batch_size=8)
        pre = prefill_flops(spec)
        dec = decode_memory(spec)
        print(
            f"{name:<14} attention_share={pre.attention_share:.4f}"
            f"  kv_share={dec.attention_share:.4f}"
        )


if __name__ == "__main__":
    main()
