"""Test the vcrnet command line."""

import json
from pathlib import Path
from typing import Any

import pandas as pd
import pytest
from click.testing import CliRunner

from src.scripts.cli import cli
from src.utils.errors import NumericalDivergenceError
from tests.flows.helpers import small_config


@pytest.fixture(scope="module")
def workspace(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Dataset, config file and a one-step training run shared by the tests."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    result = runner.invoke(cli, ["generate", "--count", "8", "--seed", "1", "--size", "64", "--out", str(root / "data")])
    assert result.exit_code == 0, result.output
    (root / "config.json").write_text(json.dumps(small_config(steps=1)))
    result = runner.invoke(
        cli,
        [
            "train",
            "--data-dir", str(root / "data"),
            "--config", str(root / "config.json"),
            "--run-dir", str(root / "run"),
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    return root


def test_generate_writes_resolved_config(workspace: Path) -> None:
    resolved = json.loads((workspace / "data" / "resolved_config.json").read_text())
    assert resolved["command"] == "generate"
    assert resolved["seed"] == 1
    assert resolved["parameters"] == {"count": 8, "size": 64}
    assert set(resolved["versions"]) >= {"numpy", "prefect", "pydantic"}
    assert len(list((workspace / "data" / "splits").glob("*.json"))) == 3


def test_generate_rejects_zero_count(tmp_path: Path) -> None:
    result = CliRunner().invoke(cli, ["generate", "--count", "0", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "❌" in result.output


def test_train_outputs(workspace: Path) -> None:
    run_dir = workspace / "run"
    assert (run_dir / "checkpoint" / "manifest.json").exists()
    assert len(pd.read_csv(run_dir / "loss_log.csv")) == 1
    resolved = json.loads((run_dir / "resolved_config.json").read_text())
    assert resolved["train"]["steps"] == 1
    assert resolved["train"]["lambda"] == [1.0, 1.0, 1.0]


def test_train_ablation_echo(workspace: Path, tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli,
        [
            "train",
            "--data-dir", str(workspace / "data"),
            "--config", str(workspace / "config.json"),
            "--run-dir", str(tmp_path),
            "--ablate", "pose",
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    assert "DEQ pose path: disabled" in result.output
    assert "text guidance: enabled" in result.output
    resolved = json.loads((tmp_path / "resolved_config.json").read_text())
    assert resolved["train"]["ablations"] == {"text": False, "pose": True, "apparent": False}


def test_train_flags_override_config(workspace: Path, tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli,
        [
            "train",
            "--data-dir", str(workspace / "data"),
            "--config", str(workspace / "config.json"),
            "--run-dir", str(tmp_path),
            "--steps", "0",
            "--split", "aff_unseen",
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    resolved = json.loads((tmp_path / "resolved_config.json").read_text())
    assert resolved["train"]["steps"] == 0
    assert resolved["train"]["split"] == "aff_unseen"


def test_train_without_dataset_is_data_error(tmp_path: Path, workspace: Path) -> None:
    result = CliRunner().invoke(
        cli,
        ["train", "--data-dir", str(tmp_path / "empty"), "--config", str(workspace / "config.json"),
         "--run-dir", str(tmp_path / "run")],
    )  # fmt: skip
    assert result.exit_code == 3


def test_train_bad_config_is_config_error(tmp_path: Path) -> None:
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"solver": {"tol": -1}}))
    result = CliRunner().invoke(cli, ["train", "--config", str(config), "--run-dir", str(tmp_path / "run")])
    assert result.exit_code == 2


def test_train_divergence_exit_code(tmp_path: Path, workspace: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def diverge(*args: Any, **kwargs: Any) -> None:
        raise NumericalDivergenceError("non-finite loss on pair pair_00000")

    monkeypatch.setattr("src.scripts.cli.training_flow", diverge)
    result = CliRunner().invoke(
        cli, ["train", "--data-dir", str(workspace / "data"), "--run-dir", str(tmp_path)]
    )
    assert result.exit_code == 4
    assert "non-finite" in result.output


def test_eval_writes_report(workspace: Path) -> None:
    out = workspace / "eval"
    result = CliRunner().invoke(
        cli,
        ["eval", "--checkpoint", str(workspace / "run" / "checkpoint"), "--data-dir", str(workspace / "data"),
         "--out", str(out)],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    assert "KLD" in result.output
    frame = pd.read_csv(out / "report.csv", comment="#")
    assert {"kld", "sim", "nss"} <= set(frame.columns)
    assert (out / "deq_traces.csv").exists()
    assert json.loads((out / "resolved_config.json").read_text())["command"] == "eval"


def test_eval_missing_checkpoint(tmp_path: Path) -> None:
    result = CliRunner().invoke(cli, ["eval", "--checkpoint", str(tmp_path / "none"), "--data-dir", str(tmp_path)])
    assert result.exit_code == 2


def test_infer_writes_fourteen_heatmaps(workspace: Path, tmp_path: Path) -> None:
    pair_dir = workspace / "data" / "pairs" / "pair_00003"
    result = CliRunner().invoke(
        cli,
        [
            "infer",
            "--checkpoint", str(workspace / "run" / "checkpoint"),
            "--interactive-image", str(pair_dir / "interactive.ppm"),
            "--non-interactive-image", str(pair_dir / "non_interactive.ppm"),
            "--pose", str(pair_dir / "pose.tnsr"),
            "--out", str(tmp_path),
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    assert len(list(tmp_path.glob("*.tnsr"))) == 14


def test_eval_and_infer_record_checkpoint_seed(workspace: Path, tmp_path: Path) -> None:
    """Test resolved configs of eval and infer carry the seed the checkpoint was trained with."""
    runner = CliRunner()
    run_dir = tmp_path / "run"
    result = runner.invoke(
        cli,
        [
            "train",
            "--data-dir", str(workspace / "data"),
            "--config", str(workspace / "config.json"),
            "--run-dir", str(run_dir),
            "--steps", "0",
            "--seed", "7",
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.output

    result = runner.invoke(
        cli,
        ["eval", "--checkpoint", str(run_dir / "checkpoint"), "--data-dir", str(workspace / "data"),
         "--out", str(tmp_path / "eval")],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "eval" / "resolved_config.json").read_text())["seed"] == 7

    pair_dir = workspace / "data" / "pairs" / "pair_00003"
    result = runner.invoke(
        cli,
        [
            "infer",
            "--checkpoint", str(run_dir / "checkpoint"),
            "--interactive-image", str(pair_dir / "interactive.ppm"),
            "--non-interactive-image", str(pair_dir / "non_interactive.ppm"),
            "--pose", str(pair_dir / "pose.tnsr"),
            "--out", str(tmp_path / "infer"),
        ],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "infer" / "resolved_config.json").read_text())["seed"] == 7


def test_infer_requires_pose(workspace: Path, tmp_path: Path) -> None:
    pair_dir = workspace / "data" / "pairs" / "pair_00003"
    result = CliRunner().invoke(
        cli,
        [
            "infer",
            "--checkpoint", str(workspace / "run" / "checkpoint"),
            "--interactive-image", str(pair_dir / "interactive.ppm"),
            "--non-interactive-image", str(pair_dir / "non_interactive.ppm"),
            "--out", str(tmp_path),
        ],
    )  # fmt: skip
    assert result.exit_code == 2
    assert "--pose" in result.output


def test_compare_rejects_unlabelled_report(tmp_path: Path) -> None:
    result = CliRunner().invoke(cli, ["compare", "--report", str(tmp_path), "--out", str(tmp_path / "c.csv")])
    assert result.exit_code == 2


@pytest.mark.slow
def test_ablation_harness(workspace: Path, tmp_path: Path) -> None:
    result = CliRunner().invoke(
        cli,
        ["ablate", "--data-dir", str(workspace / "data"), "--config", str(workspace / "config.json"),
         "--out", str(tmp_path)],
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    comparison = pd.read_csv(tmp_path / "comparison.csv", comment="#")
    assert list(comparison["variant"]) == ["full", "w/o text", "w/o pose", "w/o app"]
    assert list(comparison.columns) == ["variant", "split", "class", "part", "kld", "sim", "nss"]
