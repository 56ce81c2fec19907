"""Writing metric reports and curve plots."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from src.models.metrics import REPORT_COLUMNS, MetricReport
from src.tasks.evaluation.metrics import AVERAGING_NOTE
from src.utils.errors import DataError
from src.utils.io.atomic import atomic_write
from src.utils.io.svg import line_chart, save_svg

logger = logging.getLogger(__name__)

REPORT_FILE = "report.csv"
PER_SAMPLE_FILE = "per_sample.csv"
CURVES_FILE = "curves.csv"


def _write_csv(path: Path, frame: pd.DataFrame, notes: Optional[List[str]] = None) -> None:
    with atomic_write(path) as f:
        for note in notes or []:
            f.write(f"# {note}\n")
        frame.to_csv(f, index=False)


def write_report(report: MetricReport, directory: Union[str, Path]) -> Dict[str, Path]:
    """Write per-sample rows, the aggregate table and PR/F curves.

    ``report.csv`` starts with ``#`` comment lines naming the averaging rule;
    read it back with ``pd.read_csv(path, comment="#")``.

    Returns:
        Written files keyed by kind
    """
    directory = Path(directory)
    written = {
        "per_sample": directory / PER_SAMPLE_FILE,
        "report": directory / REPORT_FILE,
    }
    _write_csv(written["per_sample"], report.rows)
    aggregates = pd.concat([report.per_class, report.per_part, report.overall], ignore_index=True)
    _write_csv(written["report"], aggregates, report.notes)

    if report.curves is not None:
        curves = report.curves
        written["curves"] = directory / CURVES_FILE
        _write_csv(written["curves"], curves.to_frame())
        written["pr_svg"] = directory / "pr_curve.svg"
        save_svg(
            written["pr_svg"],
            line_chart({"PR": (curves.recall, curves.precision)}, "Precision-recall", "recall", "precision"),
        )
        written["f_svg"] = directory / "f_curve.svg"
        save_svg(
            written["f_svg"],
            line_chart({"F": (curves.thresholds, curves.fmeasure)}, "F-measure", "threshold", "F-measure"),
        )
    logger.info(f"✓ Wrote metric report ({len(report.rows)} rows) to {directory}")
    return written


def compare_reports(reports: Dict[str, Union[str, Path]], path: Union[str, Path]) -> pd.DataFrame:
    """Overall rows of several evaluation reports side by side.

    Args:
        reports: Report directories keyed by variant label (``full``, ``w/o pose``, ...)
        path: Comparison CSV to write

    Returns:
        One row per variant and split: ``variant`` followed by the report columns
    """
    frames = []
    for variant, directory in reports.items():
        report_path = Path(directory) / REPORT_FILE
        if not report_path.exists():
            raise DataError(f"{report_path}: report not found")
        frame = pd.read_csv(report_path, comment="#")
        overall = frame[(frame["class"] == "all") & (frame["part"] == "all")]
        frames.append(overall.assign(variant=variant)[["variant", *REPORT_COLUMNS]])
    if not frames:
        raise DataError("no reports to compare")
    comparison = pd.concat(frames, ignore_index=True)
    _write_csv(Path(path), comparison, [AVERAGING_NOTE])
    logger.info(f"✓ Compared {len(reports)} variants in {path}")
    return comparison
