"""Training objectives for the two branches and the pose alignment term."""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from src.constants import defaults
from src.numeric import Tensor, ops
from src.utils.errors import DataError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class LossBundle:
    """Scalar losses of one forward pass; ``l_total`` is their λ-weighted sum."""

    l_in: Tensor
    l_non: Tensor
    l_align: Tensor
    l_total: Tensor

    def values(self) -> Dict[str, float]:
        return {
            "l_in": self.l_in.item(),
            "l_non": self.l_non.item(),
            "l_align": self.l_align.item(),
            "l_total": self.l_total.item(),
        }


def alignment_loss(z_pose_bar: Tensor, z_pose: Tensor) -> Tensor:
    """Mean over joints of ``KL(softmax(z_pose_bar) ‖ softmax(z_pose))``.

    Softmax runs over channels of each joint token. ``z_pose`` is the
    target and receives no gradient.
    """
    if z_pose_bar.shape != z_pose.shape:
        raise ShapeError(f"alignment_loss: {z_pose_bar.shape} vs {z_pose.shape}")
    log_p = ops.log_softmax(z_pose_bar, axis=1)
    log_q = ops.log_softmax(ops.detach(z_pose), axis=1)
    p = ops.exp(log_p)
    per_joint = ops.sum(p * (log_p - log_q), axis=1)
    return ops.mean(per_joint)


def _check_target(gt: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(gt)) or gt.min() < 0.0 or gt.max() > 1.0:
        raise DataError(
            f"{name} ground truth must lie in [0, 1], got range [{gt.min():.4g}, {gt.max():.4g}]"
        )


def total_loss(
    d_in: Tensor,
    d_non: Tensor,
    gt_in: np.ndarray,
    gt_non: np.ndarray,
    l_align: Tensor,
    weights: Sequence[float] = defaults.LOSS_WEIGHTS,
) -> LossBundle:
    """Per-branch mean BCE against continuous heatmaps plus weighted alignment.

    Raises:
        DataError: If a ground-truth value falls outside [0, 1].
        ShapeError: If a prediction and its target differ in shape.
    """
    _check_target(np.asarray(gt_in), "interactive")
    _check_target(np.asarray(gt_non), "non-interactive")
    l_in = ops.bce_loss(d_in, Tensor(gt_in))
    l_non = ops.bce_loss(d_non, Tensor(gt_non))
    w_in, w_non, w_align = weights
    l_total = ops.scale(l_in, w_in) + ops.scale(l_non, w_non) + ops.scale(l_align, w_align)
    return LossBundle(l_in=l_in, l_non=l_non, l_align=l_align, l_total=l_total)
