"""Network: parameter modules, building blocks, DEQ fusion and the two-branch model."""

from src.network.deq import DEQOperator, FusionLayer, deq_backward, deq_fuse, deq_solve, f_theta
from src.network.losses import LossBundle, alignment_loss, total_loss
from src.network.module import Module
from src.network.optim import AdamW
from src.network.vcrnet import ForwardOutputs, GATOutputs, SHPOutputs, VCRNet

__all__ = [
    "AdamW",
    "DEQOperator",
    "ForwardOutputs",
    "FusionLayer",
    "GATOutputs",
    "LossBundle",
    "Module",
    "SHPOutputs",
    "VCRNet",
    "alignment_loss",
    "deq_backward",
    "deq_fuse",
    "deq_solve",
    "f_theta",
    "total_loss",
]
