"""Fixed-point solver diagnostics: trace tables, iteration histograms and residual plots."""

import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Sequence, Union

import pandas as pd

from src.models.trace import DEQTrace
from src.utils.io.atomic import atomic_write
from src.utils.io.svg import bar_chart, line_chart, save_svg

logger = logging.getLogger(__name__)

# call_id,solver,iter,residual lead; the rest qualify each row
TRACE_COLUMNS = ["call_id", "solver", "iter", "residual", "call_site", "phase", "converged"]
HISTOGRAM_COLUMNS = ["iterations", "count"]


def trace_frame(traces: Sequence[DEQTrace]) -> pd.DataFrame:
    """One row per recorded residual; ``phase`` is ``forward`` or ``adjoint``."""
    records = []
    for call, trace in enumerate(traces):
        for phase, residuals, converged in (
            ("forward", trace.residuals, trace.converged),
            ("adjoint", trace.adjoint_residuals, trace.adjoint_converged),
        ):
            for k, residual in enumerate(residuals):
                records.append(
                    {
                        "call_id": call,
                        "solver": trace.solver,
                        "iter": k + 1,
                        "residual": residual,
                        "call_site": trace.call_site,
                        "phase": phase,
                        "converged": converged,
                    }
                )
    return pd.DataFrame(records, columns=TRACE_COLUMNS)


def write_trace_csv(traces: Sequence[DEQTrace], path: Union[str, Path]) -> Path:
    path = Path(path)
    with atomic_write(path) as f:
        trace_frame(traces).to_csv(f, index=False)
    logger.info(f"✓ Wrote {len(traces)} solver traces to {path}")
    return path


def iteration_histogram(traces: Sequence[DEQTrace]) -> Dict[int, int]:
    """Number of fusion calls per forward iteration count; counts sum to ``len(traces)``."""
    return dict(sorted(Counter(trace.iterations for trace in traces).items()))


def write_histogram(traces: Sequence[DEQTrace], directory: Union[str, Path], stem: str = "iterations") -> Path:
    """Histogram CSV and bar-chart SVG; returns the CSV path."""
    directory = Path(directory)
    counts = iteration_histogram(traces)
    csv_path = directory / f"{stem}.csv"
    with atomic_write(csv_path) as f:
        pd.DataFrame(list(counts.items()), columns=HISTOGRAM_COLUMNS).to_csv(f, index=False)
    save_svg(
        directory / f"{stem}.svg",
        bar_chart(counts, "Fusion iterations per call", "iterations", "calls"),
    )
    return csv_path


def write_residual_plot(traces: Sequence[DEQTrace], path: Union[str, Path], limit: int = 12) -> Path:
    """Forward residual curves of the first ``limit`` calls on a log axis."""
    series = {
        f"{i}:{trace.call_site}": (list(range(1, trace.iterations + 1)), trace.residuals)
        for i, trace in enumerate(traces[:limit])
        if trace.residuals
    }
    save_svg(path, line_chart(series, "Fixed-point residuals", "iteration", "relative residual", log_y=True))
    return Path(path)
