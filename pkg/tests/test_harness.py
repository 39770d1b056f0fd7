import csv
import json

import pytest
from click.testing import CliRunner

from sparselab.evaluation import interpolate
from sparselab.harness import (
    ExperimentConfig,
    MockAdapter,
    analyze,
    curve_for,
    error_rows,
    load_config,
    load_run,
    pareto_rows,
    plan_demo,
    record_key,
    run_suite,
    sample_seed,
    summary_rows,
)
from sparselab.harness.cli import main as cli
from sparselab.patterns.calibration import METHOD_NAMES


def small_config(**overrides) -> ExperimentConfig:
    base = dict(
        tasks=("niah",),
        methods=("dense", "snapkv"),
        sparsity_levels=(0.0, 0.8),
        seq_lengths=(2000,),
        samples_per_config=2,
        seed=5,
        mock_mode="echo",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_fingerprint_ignores_set_field_order():
    a = small_config(methods=("dense", "snapkv"), sparsity_levels=(0.0, 0.8))
    b = small_config(methods=("snapkv", "dense"), sparsity_levels=(0.8, 0.0))
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != small_config(seed=6).fingerprint()
    assert len(a.fingerprint()) == 16


def test_config_round_trip_and_override():
    config = small_config()
    again = ExperimentConfig.from_json(config.to_json())
    assert again.fingerprint() == config.fingerprint()
    bumped = config.override(samples_per_config=9)
    assert bumped.samples_per_config == 9
    assert bumped.fingerprint() != config.fingerprint()


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(tasks=("unknown_kind",))
    with pytest.raises(ValueError):
        small_config(methods=("magic",))
    with pytest.raises(ValueError):
        small_config(sparsity_levels=(0.99,))
    with pytest.raises(ValueError):
        small_config(model_dims="gpt-17")
    with pytest.raises(ValueError):
        small_config(mock_mode="chatty")
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({**small_config().to_json(), "extra_field": 1})


def test_echo_run_scores_one(tmp_path):
    config = small_config()
    result = run_suite(config, tmp_path)
    assert result.new_records == 8
    assert result.adapter_calls == 8
    assert all(r["status"] == "ok" for r in result.records)
    assert all(r["score"] == 1.0 for r in result.records)
    assert all(r["fingerprint"] == config.fingerprint() for r in result.records)
    assert len({record_key(r) for r in result.records}) == 8


def test_empty_mode_scores_zero(tmp_path):
    config = small_config(mock_mode="empty")
    result = run_suite(config, tmp_path)
    assert all(r["score"] == 0.0 for r in result.records)
    assert all(not r["parse_ok"] for r in result.records)


def test_resume_skips_completed_records(tmp_path):
    config = small_config()
    first = run_suite(config, tmp_path)
    second = run_suite(config, tmp_path)
    assert second.new_records == 0
    assert second.adapter_calls == 0
    assert {record_key(r) for r in second.records} == {
        record_key(r) for r in first.records
    }


def test_failed_records_are_retried(tmp_path):
    def boom(prompt):
        raise RuntimeError("endpoint down")

    config = small_config()
    broken = run_suite(config, tmp_path, adapter=MockAdapter(responder=boom))
    assert all(r["status"].startswith("failed") for r in broken.records)
    assert all(r["score"] is None for r in broken.records)
    healed = run_suite(config, tmp_path)
    assert healed.new_records == 8
    assert all(r["status"] == "ok" for r in healed.records)


def test_record_fields_and_sample_reuse(tmp_path):
    config = small_config()
    result = run_suite(config, tmp_path)
    expected = {
        "task", "method", "sparsity", "seq_len", "sample_id", "sample_seed",
        "model", "status", "score", "parse_ok", "answer_block", "response",
        "elapsed_ms", "fingerprint",
    }
    assert all(expected <= set(r) for r in result.records)
    by_sample = {}
    for record in result.records:
        by_sample.setdefault(record["sample_id"], set()).add(record["sample_seed"])
    # one generated sample per (kind, length, index), shared across the
    # method x sparsity grid
    assert all(len(seeds) == 1 for seeds in by_sample.values())
    assert len(by_sample) == 2
    expected_seed = sample_seed(config.seed, "niah", 2000, 0)
    assert by_sample["niah-L2000-i0"] == {expected_seed}
    assert sample_seed(config.seed, "niah", 2000, 1) != expected_seed


def test_load_run_rejects_foreign_fingerprint(tmp_path):
    config = small_config()
    result = run_suite(config, tmp_path)
    path = result.run_dir / "records.jsonl"
    lines = path.read_text().splitlines()
    tainted = json.loads(lines[0])
    tainted["fingerprint"] = "deadbeefdeadbeef"
    path.write_text("\n".join(lines + [json.dumps(tainted)]) + "\n")
    with pytest.raises(ValueError):
        load_run(result.run_dir)


def test_summary_and_curve(tmp_path):
    config = small_config()
    result = run_suite(config, tmp_path)
    rows = summary_rows(result.records)
    assert {(r["method"], r["sparsity"]) for r in rows} == {
        ("dense", 0.0), ("dense", 0.8), ("snapkv", 0.0), ("snapkv", 0.8),
    }
    assert all(r["mean"] == 1.0 and r["n"] == 2 for r in rows)
    tasked = summary_rows(result.records, by_task=True)
    assert all(r["task"] == "niah" for r in tasked)
    curve = curve_for(result.records, "snapkv", 2000)
    assert interpolate(curve, 0.4) == 1.0
    with pytest.raises(ValueError):
        curve_for(result.records, "quest", 2000)


def synthetic_records(scores_by_sparsity) -> list[dict]:
    records = []
    for sparsity, scores in scores_by_sparsity.items():
        for i, score in enumerate(scores):
            records.append(
                {
                    "task": "niah",
                    "method": "quest",
                    "sparsity": sparsity,
                    "seq_len": 4096,
                    "sample_id": f"niah-L4096-i{i}",
                    "status": "ok",
                    "score": score,
                }
            )
    return records


def test_error_rows_against_hand_arithmetic():
    records = synthetic_records({0.0: [1.0, 0.5], 0.8: [0.5, 0.4]})
    rows = error_rows(records)
    assert len(rows) == 1
    row = rows[0]
    assert row["dense_mean"] == 0.75
    assert row["sparse_mean"] == pytest.approx(0.45)
    assert row["absolute_error"] == pytest.approx(0.30)
    assert row["relative_error"] == pytest.approx(0.40)
    # no dense baseline -> no row
    assert error_rows(synthetic_records({0.8: [0.5]})) == []


def test_pareto_rows_flags(tmp_path):
    records = synthetic_records({0.0: [1.0, 1.0], 0.5: [0.9], 0.8: [0.2]})
    config = small_config(methods=("quest",), sparsity_levels=(0.0, 0.5, 0.8))
    rows = pareto_rows(records, config)
    by_sparsity = {r["sparsity"]: r for r in rows}
    assert by_sparsity[0.8]["cost_flops"] < by_sparsity[0.0]["cost_flops"]
    # every point here trades cost against performance, so all are frontier
    assert all(r["on_frontier"] == 1 for r in rows)
    worse = synthetic_records({0.0: [1.0], 0.5: [0.9], 0.8: [0.95]})
    rows = pareto_rows(worse, config)
    flags = {r["sparsity"]: r["on_frontier"] for r in rows}
    assert flags[0.5] == 0  # dominated: costs more than 0.8 and performs worse
    assert flags[0.8] == 1 and flags[0.0] == 1


def test_analyze_writes_deterministic_csvs(tmp_path):
    config = small_config()
    result = run_suite(config, tmp_path)
    tables = analyze(result.run_dir)
    assert set(tables) == {"summary", "by_task", "errors", "frontier"}
    out = result.run_dir / "analysis"
    first = {p.name: p.read_bytes() for p in out.glob("*.csv")}
    assert "summary.csv" in first and "frontier.csv" in first
    analyze(result.run_dir)
    second = {p.name: p.read_bytes() for p in out.glob("*.csv")}
    assert first == second
    with open(out / "summary.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert all(float(r["mean"]) == 1.0 for r in rows)


DEMO_PARAMS = {
    "vertical_slash": {"num_verticals": 32, "num_slashes": 80},
    "flexprefill": {"alpha": 0.9, "min_budget": 68},
    "block_sparse": {"top_k_blocks": 6},
    "snapkv": {"token_capacity": 160},
    "ada_snapkv": {"token_capacity": 160},
    "quest": {"token_budget": 128},
}


@pytest.mark.parametrize("method", METHOD_NAMES)
def test_plan_demo_every_method(method):
    result = plan_demo(
        method, 512, params=DEMO_PARAMS[method], generator="clustered", seed=1
    )
    report = result["report"]
    assert 0.0 <= report.achieved_sparsity < 1.0
    assert report.computed_cells <= report.causal_cells
    if result["recall"] is not None:
        assert 0.0 < result["recall"] <= 1.0


def test_cli_gen_plan_cost(tmp_path):
    runner = CliRunner()
    out = tmp_path / "samples.jsonl"
    result = runner.invoke(
        cli, ["gen", "--kind", "niah", "--target-tokens", "2000",
              "--samples", "2", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert len(out.read_text().splitlines()) == 2

    result = runner.invoke(
        cli, ["plan", "--method", "quest", "--length", "512",
              "--param", "token_budget=128", "--generator", "clustered"],
    )
    assert result.exit_code == 0, result.output
    assert "achieved sparsity" in result.output

    sweep = tmp_path / "sweep.csv"
    result = runner.invoke(
        cli, ["cost", "--model", "qwen2.5-7b", "--length", "16384",
              "--density", "1.0", "--out", str(sweep)],
    )
    assert result.exit_code == 0, result.output
    with open(sweep, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert rows and rows[0]["model"] == "qwen2.5-7b"

    points = tmp_path / "points.csv"
    points.write_text("cost,performance\n1.0,0.5\n2.0,0.4\n3.0,0.9\n")
    front = tmp_path / "front.csv"
    result = runner.invoke(
        cli, ["cost", "--frontier-csv", str(points), "--out", str(front)],
    )
    assert result.exit_code == 0, result.output
    with open(front, newline="") as handle:
        kept = {float(r["cost"]) for r in csv.DictReader(handle)}
    assert kept == {1.0, 3.0}


def test_cli_run_and_analyze(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(small_config().to_json()))
    assert load_config(config_path) == small_config()
    runner = CliRunner()
    out_root = tmp_path / "runs"
    result = runner.invoke(
        cli, ["run", "--config", str(config_path), "--out", str(out_root)],
    )
    assert result.exit_code == 0, result.output
    run_dirs = [p for p in out_root.iterdir() if p.is_dir()]
    assert len(run_dirs) == 1
    result = runner.invoke(cli, ["analyze", "--run", str(run_dirs[0])])
    assert result.exit_code == 0, result.output
    assert (run_dirs[0] / "analysis" / "summary.csv").exists()
