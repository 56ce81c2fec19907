"""Evaluation flow: metrics, curves and solver diagnostics for a checkpoint."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from prefect import flow, get_run_logger

from src.flows.training.subflows import load_manifest
from src.models.metrics import CurveSamples, MetricRow
from src.models.trace import DEQTrace
from src.tasks.data.dataset import load_pairs
from src.tasks.evaluation.diagnostics import write_histogram, write_residual_plot, write_trace_csv
from src.tasks.evaluation.evaluate import evaluate_pair
from src.tasks.evaluation.metrics import aggregate
from src.tasks.evaluation.report import write_report
from src.tasks.training.checkpoint import restore_training_state
from src.utils.errors import UndefinedMetricError

DEQ_TRACES = "deq_traces.csv"
RESIDUALS_SVG = "residuals.svg"


@flow(name="evaluate_model")
def evaluation_flow(
    data_dir: Union[str, Path],
    checkpoint: Union[str, Path],
    out_dir: Union[str, Path],
    split: Optional[str] = None,
    subset: str = "test",
) -> Dict[str, Any]:
    """
    Score a checkpoint on one subset of a split.

    Args:
        data_dir: Dataset root
        checkpoint: Checkpoint directory written by the training flow
        out_dir: Report directory
        split: Split kind; defaults to the one the checkpoint was trained on
        subset: ``train``, ``val`` or ``test``

    Flow steps:
        1. Restore the model and load the subset's pairs
        2. Score every pair
        3. Aggregate and write the report
        4. Write solver traces, iteration histogram and residual plot

    Returns:
        Written files keyed by kind, plus the overall means and the checkpoint seed

    Raises:
        UndefinedMetricError: If no pair in the subset has scorable ground truth
    """
    logger = get_run_logger()
    out_dir = Path(out_dir)

    # Step 1: Model and data
    model, _, config, _ = restore_training_state(checkpoint)
    split = split or config.split.value
    manifest = load_manifest(data_dir, split)
    pairs = load_pairs(data_dir, manifest.ids(subset))
    logger.info(f"Evaluating {checkpoint} on {len(pairs)} {split}/{subset} pairs")

    # Step 2: Scores
    rows: List[MetricRow] = []
    curves: List[CurveSamples] = []
    traces: List[DEQTrace] = []
    for pair in pairs:
        result = evaluate_pair(model, pair, split)
        rows.extend(result.rows)
        curves.extend(result.curves)
        traces.extend(result.traces)
    if not rows:
        raise UndefinedMetricError(f"no scorable parts in {split}/{subset}: every ground-truth map is empty")

    # Step 3: Report
    report = aggregate(rows, curves)
    written: Dict[str, Any] = write_report(report, out_dir)

    # Step 4: Diagnostics
    written["traces"] = write_trace_csv(traces, out_dir / DEQ_TRACES)
    written["histogram"] = write_histogram(traces, out_dir)
    written["residuals"] = write_residual_plot(traces, out_dir / RESIDUALS_SVG)

    overall = report.overall.iloc[0]
    written["overall"] = {metric: float(overall[metric]) for metric in ("kld", "sim", "nss")}
    written["seed"] = config.seed
    logger.info(
        f"✓ {split}/{subset}: KLD {overall['kld']:.4f} SIM {overall['sim']:.4f} NSS {overall['nss']:.4f}"
    )
    return written
