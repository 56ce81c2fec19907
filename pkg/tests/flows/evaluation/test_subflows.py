from pathlib import Path

import pandas as pd
import pytest

from src.flows.evaluation.subflows import evaluation_flow
from src.flows.training.subflows import load_manifest, training_flow
from src.models.metrics import REPORT_COLUMNS
from src.utils.errors import CheckpointError
from tests.flows.helpers import small_config


@pytest.fixture(scope="module")
def report_dir(tmp_path_factory: pytest.TempPathFactory, dataset_dir: Path, trained_run: Path) -> Path:
    out_dir = tmp_path_factory.mktemp("eval")
    evaluation_flow(dataset_dir, trained_run / "checkpoint", out_dir)
    return out_dir


def test_report_files(report_dir: Path) -> None:
    for name in (
        "per_sample.csv",
        "report.csv",
        "curves.csv",
        "pr_curve.svg",
        "f_curve.svg",
        "deq_traces.csv",
        "iterations.csv",
        "iterations.svg",
        "residuals.svg",
    ):
        assert (report_dir / name).exists(), name


def test_report_has_three_metrics(report_dir: Path) -> None:
    frame = pd.read_csv(report_dir / "report.csv", comment="#")
    assert list(frame.columns) == REPORT_COLUMNS
    assert set(frame["split"]) == {"seen"}


def test_histogram_accounts_for_every_call(report_dir: Path, dataset_dir: Path) -> None:
    test_pairs = load_manifest(dataset_dir, "seen").test
    histogram = pd.read_csv(report_dir / "iterations.csv")
    assert histogram["count"].sum() == 3 * len(test_pairs)


def test_curves_sampled_at_255_thresholds(report_dir: Path) -> None:
    curves = pd.read_csv(report_dir / "curves.csv")
    assert len(curves) == 255
    assert curves["threshold"].iloc[0] == 0.0 and curves["threshold"].iloc[-1] == 1.0


def test_pose_ablation_has_no_solver_calls(tmp_path: Path, dataset_dir: Path) -> None:
    training_flow(dataset_dir, tmp_path, small_config(steps=1, ablations={"pose": True}))
    written = evaluation_flow(dataset_dir, tmp_path / "checkpoint", tmp_path / "eval")
    assert pd.read_csv(written["histogram"]).empty
    assert set(written["overall"]) == {"kld", "sim", "nss"}


def test_missing_checkpoint(tmp_path: Path, dataset_dir: Path) -> None:
    with pytest.raises(CheckpointError):
        evaluation_flow(dataset_dir, tmp_path / "none", tmp_path / "eval")
