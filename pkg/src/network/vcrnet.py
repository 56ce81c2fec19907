"""Two-branch affordance network.

The interactive branch (SHP) fuses the interactive image with pose and
part semantics and predicts where each body part touches the object. The
non-interactive branch (GAT) transfers those contact features to an image
of the object alone, guided by per-part masks of the interactive prediction.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.constants import defaults
from src.constants.parts import NUM_PARTS
from src.models.config import AblationConfig, FusionConfig, ModelConfig, SolverConfig
from src.models.trace import DEQTrace
from src.network.blocks import (
    CrossTransformerBlock,
    HeatmapDecoder,
    MultiScaleFusion,
    PartEmbeddingTable,
    PoseEncoder,
    PyramidEncoder,
    shp_text_guidance,
)
from src.network.deq import FusionLayer
from src.network.layers import Conv2d, Linear, map_to_tokens, tokens_to_map
from src.network.losses import alignment_loss
from src.network.module import Module
from src.numeric import SplitMix64, Tensor, ops
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class SHPOutputs:
    """Interactive branch intermediates; token tensors are ``L×c``, maps ``c×h×w``."""

    x_hat_in: Tensor
    z_in: Tensor
    z_pose: Tensor
    x_sp: Tensor
    f_hat_in: Tensor
    d_in: Tensor
    traces: List[DEQTrace] = field(default_factory=list)


@dataclass
class GATOutputs:
    """Non-interactive branch intermediates.

    ``g_in`` holds one masked copy of ``f_hat_in`` per part; ``g_pooled`` is
    their masked means, one c-vector per part.
    """

    z_non: Tensor
    z_pose_bar: Tensor
    g_in: List[Tensor]
    g_pooled: Tensor
    z_hat_non: Tensor
    f_hat_non: Tensor
    f_fuse: Tensor
    d_non: Tensor
    traces: List[DEQTrace] = field(default_factory=list)


@dataclass
class ForwardOutputs:
    shp: SHPOutputs
    gat: GATOutputs
    l_align: Tensor
    masks: np.ndarray

    @property
    def traces(self) -> List[DEQTrace]:
        return self.shp.traces + self.gat.traces


class VCRNet(Module):
    """Siamese image encoder, pose encoder, part table and both branch heads."""

    def __init__(
        self,
        model: ModelConfig,
        fusion: FusionConfig,
        solver: SolverConfig,
        ablations: Optional[AblationConfig] = None,
        seed: int = 0,
    ) -> None:
        super().__init__()
        self.config = model
        self.ablations = ablations or AblationConfig()
        rng = SplitMix64(seed)
        c = model.channels
        c1, c2, c3, c4 = model.stage_channels
        ratio = model.mlp_ratio

        self.encoder = self.child(
            "encoder", PyramidEncoder(rng.spawn(1), model.stage_channels, model.reduction_ratios, ratio)
        )
        self.pose_encoder = self.child("pose_encoder", PoseEncoder(rng.spawn(2), c, model.pose_layers, ratio))
        self.part_table = self.child("part_table", PartEmbeddingTable(rng.spawn(3), c))
        self.proj4 = self.child("proj4", Linear(rng.spawn(4), c4, c))

        self.text_block = self.child("text_block", CrossTransformerBlock(rng.spawn(5), c, ratio))
        self.fuse_shp = self.child("fuse_shp", FusionLayer(rng.spawn(6), c, 2, fusion, solver, ratio))
        if fusion.shared_pose_operator:
            self.fuse_gat = self.fuse_shp
        else:
            self.fuse_gat = self.child("fuse_gat", FusionLayer(rng.spawn(7), c, 2, fusion, solver, ratio))
        self.fuse_app = self.child("fuse_app", FusionLayer(rng.spawn(8), c, 3, fusion, solver, ratio))

        self.shp_enrich = self.child("shp_enrich", Conv2d(rng.spawn(9), c, c, 1))
        self.shp_affinity = self.child("shp_affinity", Conv2d(rng.spawn(10), 2 * c, c, 1))
        self.shp_fusion = self.child("shp_fusion", MultiScaleFusion(rng.spawn(11), (c1, c2, c3, c), c))
        self.dec_in = self.child("dec_in", HeatmapDecoder(rng.spawn(12), c))

        self.gat_enrich = self.child("gat_enrich", Conv2d(rng.spawn(13), c, c, 1))
        self.gat_fusion = self.child("gat_fusion", MultiScaleFusion(rng.spawn(14), (c1, c2, c3, c), c))
        self.contact_fuse = self.child(
            "contact_fuse", Conv2d(rng.spawn(15), c + NUM_PARTS * c, c, 1)
        )
        self.dec_non = self.child("dec_non", HeatmapDecoder(rng.spawn(16), c))

    def project_stage4(self, x4: Tensor) -> Tensor:
        """Stage-4 map to ``(h4·w4)×c`` tokens."""
        return self.proj4(map_to_tokens(x4))

    def fuse(
        self, layer: FusionLayer, sources: Sequence[Tensor], call_site: str, traces: List[DEQTrace]
    ) -> List[Tensor]:
        """DEQFuse, or the identity when pose fusion is ablated."""
        if self.ablations.pose:
            return list(sources)
        blocks, trace = layer(sources, call_site)
        traces.append(trace)
        return blocks

    def forward(
        self,
        image_in: Tensor,
        image_non: Tensor,
        pose: Tensor,
        masks: Optional[np.ndarray] = None,
    ) -> ForwardOutputs:
        """Run both branches.

        Args:
            masks: Binary ``7×h1×w1`` part masks gating contact features. When
                omitted the interactive prediction thresholded at 0.5 is used.
        """
        x_pose = self.pose_encoder(pose)
        x_in_stages = self.encoder(image_in)
        x_non_stages = self.encoder(image_non)
        shp = shp_forward(x_in_stages, x_pose, self.part_table(), self)
        if masks is None:
            masks = (shp.d_in.data > defaults.MASK_THRESHOLD).astype(np.float64)
        gat = gat_forward(x_non_stages, x_pose, shp, masks, self)
        l_align = alignment_loss(gat.z_pose_bar, shp.z_pose)
        return ForwardOutputs(shp=shp, gat=gat, l_align=l_align, masks=masks)

    __call__ = forward


def shp_forward(
    x_in_stages: Sequence[Tensor], x_pose: Tensor, part_embeds: Tensor, model: VCRNet
) -> SHPOutputs:
    """Semantic-pose perception on the interactive image."""
    x1, x2, x3, x4 = x_in_stages
    _, h4, w4 = x4.shape
    x4c = model.project_stage4(x4)
    traces: List[DEQTrace] = []

    if model.ablations.text:
        x_hat_in = x4c
    else:
        x_hat_in = shp_text_guidance(x4c, part_embeds, model.text_block)

    z_in, z_pose = model.fuse(model.fuse_shp, [x4c, x_pose], "shp", traces)
    x_tilde = model.shp_enrich(tokens_to_map(z_in + x4c, h4, w4))
    x_sp = model.shp_affinity(ops.concat([x_tilde, tokens_to_map(x_hat_in, h4, w4)], axis=0))
    f_hat_in = model.shp_fusion([x1, x2, x3, x_sp])
    d_in = model.dec_in(f_hat_in)
    return SHPOutputs(
        x_hat_in=x_hat_in,
        z_in=z_in,
        z_pose=z_pose,
        x_sp=x_sp,
        f_hat_in=f_hat_in,
        d_in=d_in,
        traces=traces,
    )


def extract_contact_features(f_hat_in: Tensor, masks: np.ndarray) -> List[Tensor]:
    """Mask ``f_hat_in`` once per part; masks broadcast over channels.

    Raises:
        ShapeError: If the masks are not ``k×h1×w1`` for ``f_hat_in``'s grid.
    """
    masks = np.asarray(masks, dtype=np.float64)
    if masks.ndim != 3 or masks.shape[1:] != f_hat_in.shape[1:]:
        raise ShapeError(
            f"extract_contact_features: masks {masks.shape} do not match features {f_hat_in.shape}"
        )
    return [f_hat_in * Tensor(mask[None]) for mask in masks]


def pool_contact_features(g_in: Sequence[Tensor], masks: np.ndarray) -> Tensor:
    """Masked mean of each part's features: ``k×c`` tokens (zero for empty masks)."""
    rows = []
    for g, mask in zip(g_in, np.asarray(masks)):
        count = max(float(mask.sum()), 1.0)
        rows.append(ops.reshape(ops.scale(ops.sum(g, axis=(1, 2)), 1.0 / count), (1, g.shape[0])))
    return ops.concat(rows, axis=0)


def expand_contact_features(g_pooled: Tensor, h: int, w: int) -> Tensor:
    """Broadcast each part vector over the grid: ``k×c`` → ``(k·c)×h×w``."""
    k, c = g_pooled.shape
    return ops.broadcast_to(ops.reshape(g_pooled, (k * c, 1, 1)), (k * c, h, w))


def gat_forward(
    x_non_stages: Sequence[Tensor],
    x_pose: Tensor,
    shp: SHPOutputs,
    masks: np.ndarray,
    model: VCRNet,
) -> GATOutputs:
    """Geometric-apparent transfer onto the non-interactive image."""
    x1, x2, x3, x4 = x_non_stages
    _, h4, w4 = x4.shape
    _, h1, w1 = shp.f_hat_in.shape
    x4c = model.project_stage4(x4)
    traces: List[DEQTrace] = []

    z_non, z_pose_bar = model.fuse(model.fuse_gat, [x4c, x_pose], "gat", traces)
    x_tilde = model.gat_enrich(tokens_to_map(z_non + x4c, h4, w4))

    g_in = extract_contact_features(shp.f_hat_in, masks)
    if model.ablations.apparent:
        g_pooled = Tensor(np.zeros((NUM_PARTS, model.config.channels)))
    else:
        g_pooled = pool_contact_features(g_in, masks)

    z_hat_non = model.fuse(
        model.fuse_app, [map_to_tokens(x_tilde), g_pooled, z_pose_bar], "app", traces
    )[0]
    f_hat_non = model.gat_fusion([x1, x2, x3, x_tilde])
    lifted = ops.bilinear_upsample(tokens_to_map(z_hat_non, h4, w4), h1, w1)
    f_fuse = model.contact_fuse(
        ops.concat([f_hat_non + lifted, expand_contact_features(g_pooled, h1, w1)], axis=0)
    )
    d_non = model.dec_non(f_fuse)
    return GATOutputs(
        z_non=z_non,
        z_pose_bar=z_pose_bar,
        g_in=g_in,
        g_pooled=g_pooled,
        z_hat_non=z_hat_non,
        f_hat_non=f_hat_non,
        f_fuse=f_fuse,
        d_non=d_non,
        traces=traces,
    )


def forward(
    model: VCRNet,
    image_in: Tensor,
    image_non: Tensor,
    pose: Tensor,
    masks: Optional[np.ndarray] = None,
) -> ForwardOutputs:
    return model.forward(image_in, image_non, pose, masks)
