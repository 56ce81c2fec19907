"""Tasks for batching pairs and running one optimizer step."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from prefect import task
from prefect.cache_policies import NONE

from src.constants import defaults
from src.models.config import TrainConfig
from src.models.samples import SamplePair
from src.models.trace import DEQTrace
from src.network.losses import total_loss
from src.network.optim import AdamW
from src.network.vcrnet import VCRNet
from src.numeric import SplitMix64, Tensor, backward
from src.tasks.data.augment import flip_pair
from src.tasks.data.heatmaps import binarize, downsample_heatmaps
from src.utils.errors import DataError, NumericalDivergenceError

logger = logging.getLogger(__name__)

LOSS_NAMES = ("l_in", "l_non", "l_align", "l_total")


@dataclass
class StepResult:
    """Batch-mean losses of one step and the solver traces it produced."""

    losses: Dict[str, float]
    traces: List[DEQTrace] = field(default_factory=list)


def pair_inputs(pair: SamplePair) -> Tuple[Tensor, Tensor, Tensor]:
    return Tensor(pair.image_in), Tensor(pair.image_non), Tensor(pair.pose)


def decoder_targets(pair: SamplePair, stride: int = defaults.DECODER_STRIDE) -> Tuple[np.ndarray, np.ndarray]:
    """Ground-truth maps resampled to the decoder grid."""
    return downsample_heatmaps(pair.gt_in, stride), downsample_heatmaps(pair.gt_non, stride)


def make_masks(gt_in: np.ndarray, teacher_forcing: bool) -> Optional[np.ndarray]:
    """Binarized interactive ground truth, or None to let the model use its own prediction."""
    return binarize(gt_in) if teacher_forcing else None


def sample_batch(pairs: Sequence[SamplePair], size: int, step: int, seed: int, flip: bool) -> List[SamplePair]:
    """Deterministic batch for ``step``: distinct pairs while ``size`` allows, each flipped with p = 0.5.

    Raises:
        DataError: If there are no pairs to draw from
    """
    if not pairs:
        raise DataError("no training pairs to sample from")
    rng = SplitMix64(seed).spawn(step)
    order = np.concatenate(
        [rng.spawn(1).spawn(i).permutation(len(pairs)) for i in range(math.ceil(size / len(pairs)))]
    )[:size]
    coins = rng.spawn(2).uniform(size)
    return [flip_pair(pairs[i]) if flip and coin < 0.5 else pairs[i] for i, coin in zip(order, coins)]


@task(name="train_step", cache_policy=NONE)
def train_step(
    model: VCRNet, optimizer: AdamW, batch: Sequence[SamplePair], config: TrainConfig
) -> StepResult:
    """One forward and backward per pair, then one AdamW update on the mean gradient.

    Raises:
        NumericalDivergenceError: If any loss is not finite; carries the traces so far
    """
    optimizer.zero_grad()
    totals = dict.fromkeys(LOSS_NAMES, 0.0)
    traces: List[DEQTrace] = []
    for pair in batch:
        gt_in, gt_non = decoder_targets(pair)
        out = model(*pair_inputs(pair), masks=make_masks(gt_in, config.teacher_forcing))
        traces.extend(out.traces)
        losses = total_loss(out.shp.d_in, out.gat.d_non, gt_in, gt_non, out.l_align, config.loss_weights)
        values = losses.values()
        if not all(math.isfinite(v) for v in values.values()):
            logger.error(f"Non-finite loss on {pair.pair_id}: {values}")
            raise NumericalDivergenceError(f"non-finite loss on pair {pair.pair_id}: {values}", traces)
        backward(losses.l_total)
        for name in LOSS_NAMES:
            totals[name] += values[name]

    optimizer.step(scale=1.0 / len(batch))
    unconverged = sum(1 for t in traces if not t.converged and t.solver in ("anderson", "picard"))
    if unconverged:
        logger.warning(f"{unconverged}/{len(traces)} fixed-point solves stopped before tolerance")
    return StepResult(losses={name: total / len(batch) for name, total in totals.items()}, traces=traces)
