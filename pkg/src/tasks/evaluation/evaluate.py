"""Scoring a trained model on sample pairs."""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from prefect import task
from prefect.cache_policies import NONE

from src.constants.parts import PART_ORDER
from src.models.metrics import CurveSamples, MetricRow
from src.models.samples import SamplePair
from src.models.trace import DEQTrace
from src.network.vcrnet import VCRNet
from src.numeric import Tensor, no_grad, ops
from src.tasks.evaluation.metrics import pr_f_curves, score_part
from src.tasks.training.step import pair_inputs

logger = logging.getLogger(__name__)


@dataclass
class PairEvaluation:
    rows: List[MetricRow] = field(default_factory=list)
    curves: List[CurveSamples] = field(default_factory=list)
    traces: List[DEQTrace] = field(default_factory=list)


def upsample_prediction(maps: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinearly resize ``k×h'×w'`` predictions to the image grid."""
    with no_grad():
        return ops.bilinear_upsample(Tensor(maps), h, w).data


@task(name="evaluate_pair", cache_policy=NONE)
def evaluate_pair(model: VCRNet, pair: SamplePair, split: str) -> PairEvaluation:
    """Metrics of the non-interactive prediction for every annotated part.

    Masks come from the model's own interactive prediction. Parts without
    ground truth are skipped since every metric is undefined for them.
    """
    with no_grad():
        out = model(*pair_inputs(pair))
    d_non = upsample_prediction(out.gat.d_non.data, pair.height, pair.width)

    result = PairEvaluation(traces=list(out.traces))
    for k, part in enumerate(PART_ORDER):
        fixations = pair.fixations_non.get(part.value, [])
        if not fixations or pair.gt_non[k].sum() <= 0:
            continue
        result.rows.append(
            score_part.fn(d_non[k], pair.gt_non[k], fixations, split, pair.affordance, part.value, pair.pair_id)
        )
        result.curves.append(pr_f_curves(d_non[k], pair.gt_non[k]))
    logger.debug(f"Scored {len(result.rows)} parts of {pair.pair_id}")
    return result
