"""Saliency-style metrics for predicted part heatmaps.

KLD and SIM compare two maps as distributions; NSS scores a prediction at
the raw annotation points; PR and F-measure curves threshold the prediction
against binarized ground truth.
"""

import logging
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from prefect import task
from prefect.cache_policies import NONE

from src.constants import defaults
from src.models.metrics import REPORT_COLUMNS, CurveSamples, MetricReport, MetricRow
from src.utils.errors import DataError, ShapeError, UndefinedMetricError

logger = logging.getLogger(__name__)

METRICS = ["kld", "sim", "nss"]
AVERAGING_NOTE = "averaging: per image and part, then arithmetic mean over rows"


def _check_pair(pred: np.ndarray, gt: np.ndarray, name: str) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"{name}: prediction {pred.shape} vs ground truth {gt.shape}")
    if pred.min() < 0 or gt.min() < 0:
        raise DataError(f"{name}: maps must be nonnegative")
    if gt.sum() <= 0:
        raise UndefinedMetricError(f"{name} is undefined for an all-zero ground truth")
    return pred, gt


def _as_distribution(values: np.ndarray) -> np.ndarray:
    total = values.sum()
    return values / total if total > 0 else values


def kld(pred: np.ndarray, gt: np.ndarray, eps: float = defaults.METRIC_EPS) -> float:
    """``Σ gt · ln(ε + gt / (pred + ε))`` with both maps normalized to sum 1."""
    pred, gt = _check_pair(pred, gt, "KLD")
    p, q = _as_distribution(pred), _as_distribution(gt)
    return float(np.sum(q * np.log(eps + q / (p + eps))))


def sim(pred: np.ndarray, gt: np.ndarray) -> float:
    """Histogram intersection of the normalized maps, in [0, 1]."""
    pred, gt = _check_pair(pred, gt, "SIM")
    return float(np.sum(np.minimum(_as_distribution(pred), _as_distribution(gt))))


def _fixation_pixels(fixations: Iterable[Tuple[int, int]], shape: Tuple[int, ...]) -> List[Tuple[int, int]]:
    h, w = shape
    pixels = sorted({(int(x), int(y)) for x, y in fixations})
    for x, y in pixels:
        if not (0 <= x < w and 0 <= y < h):
            raise DataError(f"NSS fixation ({x}, {y}) outside {w}×{h} map")
    return pixels


def is_degenerate(pred: np.ndarray) -> bool:
    """True when the map has no variance, so NSS falls back to 0."""
    return bool(np.std(pred) == 0)


def nss(pred: np.ndarray, fixations: Iterable[Tuple[int, int]]) -> float:
    """Mean of the standardized map at the distinct fixation pixels.

    Args:
        pred: ``h×w`` prediction
        fixations: ``(x, y)`` pixel coordinates; duplicates count once

    Returns:
        NSS, or 0.0 for a constant prediction

    Raises:
        UndefinedMetricError: If there are no fixations
    """
    pred = np.asarray(pred, dtype=np.float64)
    pixels = _fixation_pixels(fixations, pred.shape)
    if not pixels:
        raise UndefinedMetricError("NSS needs at least one fixation")
    if is_degenerate(pred):
        logger.warning("NSS on a constant prediction; reporting 0")
        return 0.0
    standardized = (pred - pred.mean()) / pred.std()
    xs, ys = zip(*pixels)
    return float(standardized[list(ys), list(xs)].mean())


def pr_f_curves(
    pred: np.ndarray,
    gt: np.ndarray,
    n_thresholds: int = defaults.PR_THRESHOLDS,
    beta_squared: float = defaults.F_BETA_SQUARED,
) -> CurveSamples:
    """Precision, recall and F-measure of ``pred > t`` at uniform thresholds in [0, 1].

    Ground truth is binarized at 0.5. An empty prediction has precision 1 and recall 0.

    Raises:
        UndefinedMetricError: If the binarized ground truth is empty
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    positive = np.asarray(gt).ravel() > defaults.GT_BINARY_THRESHOLD
    if pred.shape != positive.shape:
        raise ShapeError(f"PR curves: prediction {pred.size} vs ground truth {positive.size} pixels")
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise UndefinedMetricError("PR/F curves are undefined for an empty ground-truth mask")

    thresholds = np.linspace(0.0, 1.0, n_thresholds)
    pos_sorted = np.sort(pred[positive])
    neg_sorted = np.sort(pred[~positive])
    tp = n_pos - np.searchsorted(pos_sorted, thresholds, side="right")
    fp = neg_sorted.size - np.searchsorted(neg_sorted, thresholds, side="right")
    predicted = tp + fp
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 1.0)
    recall = tp / n_pos
    denom = beta_squared * precision + recall
    safe = np.where(denom > 0, denom, 1.0)
    fmeasure = np.where(denom > 0, (1 + beta_squared) * precision * recall / safe, 0.0)
    return CurveSamples(
        thresholds=thresholds.tolist(),
        precision=precision.tolist(),
        recall=recall.tolist(),
        fmeasure=fmeasure.tolist(),
    )


def mean_curves(curves: Sequence[CurveSamples]) -> CurveSamples:
    """Pointwise mean of curves sampled at the same thresholds."""
    if not curves:
        raise UndefinedMetricError("no curves to average")
    return CurveSamples(
        thresholds=list(curves[0].thresholds),
        precision=np.mean([c.precision for c in curves], axis=0).tolist(),
        recall=np.mean([c.recall for c in curves], axis=0).tolist(),
        fmeasure=np.mean([c.fmeasure for c in curves], axis=0).tolist(),
    )


@task(name="score_part", cache_policy=NONE)
def score_part(
    pred: np.ndarray,
    gt: np.ndarray,
    fixations: Sequence[Tuple[int, int]],
    split: str,
    affordance: str,
    part: str,
    sample_id: str = "",
) -> MetricRow:
    """KLD, SIM and NSS of one part channel."""
    return MetricRow(
        split=split,
        affordance=affordance,
        part=part,
        kld=kld(pred, gt),
        sim=sim(pred, gt),
        nss=nss(pred, fixations),
        sample_id=sample_id,
        nss_degenerate=is_degenerate(pred),
    )


def _means(frame: pd.DataFrame, by: List[str]) -> pd.DataFrame:
    return frame.groupby(by, sort=True)[METRICS].mean().reset_index()


def aggregate(rows: Sequence[MetricRow], curves: Sequence[CurveSamples] = ()) -> MetricReport:
    """Per-class, per-part and overall means of metric rows.

    Rows are sorted before reduction, so any permutation of the same rows
    produces the same report.
    """
    frame = pd.DataFrame(
        [{**row.as_record(), "sample_id": row.sample_id} for row in rows],
        columns=REPORT_COLUMNS + ["sample_id"],
    )
    frame = frame.sort_values(REPORT_COLUMNS[:3] + ["sample_id"] + METRICS, kind="mergesort").reset_index(drop=True)

    per_class = _means(frame, ["split", "class"])
    per_class.insert(2, "part", "all")
    per_part = _means(frame, ["split", "part"])
    per_part.insert(1, "class", "all")
    overall = _means(frame, ["split"])
    overall.insert(1, "class", "all")
    overall.insert(2, "part", "all")

    notes = [AVERAGING_NOTE]
    degenerate = sum(row.nss_degenerate for row in rows)
    if degenerate:
        notes.append(f"{degenerate} rows had a constant prediction (NSS = 0)")
    return MetricReport(
        rows=frame[REPORT_COLUMNS],
        per_class=per_class[REPORT_COLUMNS],
        per_part=per_part[REPORT_COLUMNS],
        overall=overall[REPORT_COLUMNS],
        curves=mean_curves(curves) if curves else None,
        notes=notes,
    )
