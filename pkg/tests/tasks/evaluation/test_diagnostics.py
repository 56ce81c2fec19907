from pathlib import Path
from typing import List

import pandas as pd
import pytest

from src.models.trace import DEQTrace
from src.tasks.evaluation.diagnostics import (
    TRACE_COLUMNS,
    iteration_histogram,
    trace_frame,
    write_histogram,
    write_residual_plot,
    write_trace_csv,
)


@pytest.fixture
def traces() -> List[DEQTrace]:
    return [
        DEQTrace(solver="anderson", tol=1e-5, residuals=[0.1, 1e-3, 1e-6], call_site="shp",
                 adjoint_residuals=[0.2, 1e-6], adjoint_converged=True),
        DEQTrace(solver="anderson", tol=1e-5, residuals=[0.1, 1e-6], call_site="gat"),
        DEQTrace(solver="anderson", tol=1e-5, residuals=[0.3, 1e-2, 1e-4, 1e-6], call_site="app"),
        DEQTrace(solver="anderson", tol=1e-5, residuals=[0.2, 1e-6], call_site="shp"),
    ]  # fmt: skip


def test_trace_frame_rows(traces: List[DEQTrace]) -> None:
    frame = trace_frame(traces)
    assert list(frame.columns) == TRACE_COLUMNS
    assert len(frame) == 3 + 2 + 2 + 4 + 2
    adjoint = frame[frame["phase"] == "adjoint"]
    assert list(adjoint["residual"]) == [0.2, 1e-6]
    assert set(frame["call_id"]) == {0, 1, 2, 3}


def test_histogram_counts_every_call(traces: List[DEQTrace]) -> None:
    histogram = iteration_histogram(traces)
    assert histogram == {2: 2, 3: 1, 4: 1}
    assert sum(histogram.values()) == len(traces)


def test_write_trace_csv(tmp_path: Path, traces: List[DEQTrace]) -> None:
    path = write_trace_csv(traces, tmp_path / "deq_traces.csv")
    header = path.read_text().splitlines()[0]
    assert header.split(",")[:4] == ["call_id", "solver", "iter", "residual"]
    assert header == "call_id,solver,iter,residual,call_site,phase,converged"
    frame = pd.read_csv(path)
    assert frame["iter"].max() == 4
    first = frame.iloc[0]
    assert (first["call_id"], first["solver"], first["iter"]) == (0, "anderson", 1)
    assert first["residual"] == pytest.approx(0.1)


def test_write_histogram_files(tmp_path: Path, traces: List[DEQTrace]) -> None:
    csv_path = write_histogram(traces, tmp_path)
    frame = pd.read_csv(csv_path)
    assert frame["count"].sum() == len(traces)
    svg = (tmp_path / "iterations.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<title>") == 3


def test_residual_plot_is_svg(tmp_path: Path, traces: List[DEQTrace]) -> None:
    path = write_residual_plot(traces, tmp_path / "residuals.svg", limit=2)
    svg = path.read_text()
    assert svg.count("<polyline") == 2


def test_empty_traces_still_write(tmp_path: Path) -> None:
    assert iteration_histogram([]) == {}
    write_histogram([], tmp_path)
    write_residual_plot([], tmp_path / "residuals.svg")
    assert pd.read_csv(tmp_path / "iterations.csv").empty
