"""Building blocks: attention, cross-transformer, encoders, fusion and decoder.

All attention is single-head dot-product attention on token-major ``L×c``
sequences. Maps are ``c×h×w`` and are flattened row-major into tokens.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from src.constants import defaults
from src.constants.parts import NUM_JOINTS, NUM_PARTS
from src.network.layers import MLP, Conv2d, LayerNorm, Linear, map_to_tokens, tokens_to_map
from src.network.module import Module, xavier_uniform
from src.numeric import SplitMix64, Tensor, ops
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)

EMBEDDING_STD = 0.02


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """``softmax(q kᵀ / √c) v`` over the key axis."""
    if q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise ShapeError(f"attention: q {q.shape}, k {k.shape}, v {v.shape} do not line up")
    scores = ops.scale(ops.matmul(q, k.T), 1.0 / np.sqrt(q.shape[1]))
    return ops.matmul(ops.softmax(scores, axis=-1), v)


class CrossTransformerBlock(Module):
    """``Y = MCA(LN1(x1), LN1(x2)) + x1``; ``O = MLP(LN2(Y)) + Y``.

    Query, key and value projections carry no bias, so zeroed projection and
    MLP weights make the block the identity on its query stream.
    """

    def __init__(self, rng: SplitMix64, dim: int, mlp_ratio: int = defaults.MLP_RATIO) -> None:
        super().__init__()
        self.dim = dim
        self.ln1 = self.child("ln1", LayerNorm(dim))
        self.ln2 = self.child("ln2", LayerNorm(dim))
        self.w_q = self.param("w_q", xavier_uniform(rng.spawn(1), dim, dim))
        self.w_k = self.param("w_k", xavier_uniform(rng.spawn(2), dim, dim))
        self.w_v = self.param("w_v", xavier_uniform(rng.spawn(3), dim, dim))
        self.w_o = self.param("w_o", xavier_uniform(rng.spawn(4), dim, dim))
        self.mlp = self.child("mlp", MLP(rng.spawn(5), dim, mlp_ratio))

    def __call__(self, x1: Tensor, x2: Tensor) -> Tensor:
        for name, x in (("query", x1), ("key/value", x2)):
            if x.ndim != 2 or x.shape[1] != self.dim:
                raise ShapeError(f"cross_transformer: {name} stream {x.shape} is not L×{self.dim}")
        q_in = self.ln1(x1)
        kv_in = self.ln1(x2)
        mixed = attention(q_in @ self.w_q, kv_in @ self.w_k, kv_in @ self.w_v)
        y = mixed @ self.w_o + x1
        return self.mlp(self.ln2(y)) + y


def cross_transformer(x1: Tensor, x2: Tensor, block: CrossTransformerBlock) -> Tensor:
    return block(x1, x2)


def shp_text_guidance(x_in: Tensor, x_t: Tensor, block: CrossTransformerBlock) -> Tensor:
    """Guide image tokens by part semantics: keys/values are ``[x_in; x_t]``."""
    return block(x_in, ops.concat([x_in, x_t], axis=0))


class EncoderStage(Module):
    """Strided patch merge followed by one spatially reduced attention block."""

    def __init__(
        self,
        rng: SplitMix64,
        in_ch: int,
        out_ch: int,
        stride: int,
        reduction: int,
        mlp_ratio: int,
    ) -> None:
        super().__init__()
        self.stride = stride
        self.reduction = reduction
        self.embed = self.child("embed", Conv2d(rng.spawn(1), in_ch * stride * stride, out_ch, 1))
        self.block = self.child("block", CrossTransformerBlock(rng.spawn(2), out_ch, mlp_ratio))

    def __call__(self, x: Tensor) -> Tensor:
        x = self.embed(ops.space_to_depth(x, self.stride))
        _, h, w = x.shape
        tokens = map_to_tokens(x)
        context = map_to_tokens(ops.avg_pool2d(x, self.reduction))
        return tokens_to_map(self.block(tokens, context), h, w)


class PyramidEncoder(Module):
    """Four stages at strides 4, 8, 16 and 32 of the input."""

    def __init__(
        self,
        rng: SplitMix64,
        stage_channels: Sequence[int] = defaults.STAGE_CHANNELS,
        reduction_ratios: Sequence[int] = defaults.REDUCTION_RATIOS,
        mlp_ratio: int = defaults.MLP_RATIO,
    ) -> None:
        super().__init__()
        self.stage_channels = tuple(stage_channels)
        in_ch = 3
        self.stages: List[EncoderStage] = []
        for i, (out_ch, stride, ratio) in enumerate(
            zip(stage_channels, defaults.STAGE_STRIDES, reduction_ratios)
        ):
            stage = EncoderStage(rng.spawn(i + 1), in_ch, out_ch, stride, ratio, mlp_ratio)
            self.stages.append(self.child(f"stage{i + 1}", stage))
            in_ch = out_ch

    def __call__(self, img: Tensor) -> List[Tensor]:
        if img.ndim != 3 or img.shape[0] != 3:
            raise ShapeError(f"encode_image: expected a 3×H×W image, got {img.shape}")
        _, h, w = img.shape
        if h % defaults.SIZE_MULTIPLE or w % defaults.SIZE_MULTIPLE:
            raise ShapeError(
                f"encode_image: {h}×{w} is not divisible by {defaults.SIZE_MULTIPLE}"
            )
        features = []
        x = img
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return features


def encode_image(img: Tensor, enc: PyramidEncoder) -> List[Tensor]:
    return enc(img)


class PoseEncoder(Module):
    """Lift 53×3 joints to 53×c tokens and run self-attention layers."""

    def __init__(
        self,
        rng: SplitMix64,
        dim: int,
        layers: int = defaults.POSE_LAYERS,
        mlp_ratio: int = defaults.MLP_RATIO,
    ) -> None:
        super().__init__()
        self.lift = self.child("lift", Linear(rng.spawn(1), 3, dim))
        self.joint_embed = self.param(
            "joint_embed", rng.spawn(2).normal((NUM_JOINTS, dim), std=EMBEDDING_STD)
        )
        self.blocks = [
            self.child(f"block{i + 1}", CrossTransformerBlock(rng.spawn(10 + i), dim, mlp_ratio))
            for i in range(layers)
        ]

    def __call__(self, pose: Tensor) -> Tensor:
        if pose.shape != (NUM_JOINTS, 3):
            raise ShapeError(f"pose must be {NUM_JOINTS}×3, got {pose.shape}")
        x = self.lift(pose) + self.joint_embed
        for block in self.blocks:
            x = block(x, x)
        return x


class PartEmbeddingTable(Module):
    """One learned c-vector per body part, in canonical part order."""

    def __init__(self, rng: SplitMix64, dim: int) -> None:
        super().__init__()
        self.weight = self.param("weight", rng.normal((NUM_PARTS, dim), std=EMBEDDING_STD))

    def __call__(self, parts: Optional[Sequence[int]] = None) -> Tensor:
        if parts is None:
            return self.weight
        if any(p < 0 or p >= NUM_PARTS for p in parts):
            raise ShapeError(f"part index out of range 0..{NUM_PARTS - 1}: {list(parts)}")
        onehot = np.zeros((len(parts), NUM_PARTS))
        onehot[np.arange(len(parts)), list(parts)] = 1.0
        return ops.matmul(Tensor(onehot), self.weight)


class MultiScaleFusion(Module):
    """Project every scale to c, upsample to the finest grid, concat, project back."""

    def __init__(self, rng: SplitMix64, in_channels: Sequence[int], dim: int) -> None:
        super().__init__()
        self.branches = [
            self.child(f"proj{i + 1}", Conv2d(rng.spawn(i + 1), ch, dim, 1))
            for i, ch in enumerate(in_channels)
        ]
        self.fuse = self.child("fuse", Conv2d(rng.spawn(10), dim * len(in_channels), dim, 1))

    def __call__(self, maps: Sequence[Tensor]) -> Tensor:
        if len(maps) != len(self.branches):
            raise ShapeError(f"multiscale_fuse: expected {len(self.branches)} maps, got {len(maps)}")
        if any(m.ndim != 3 for m in maps):
            raise ShapeError(f"multiscale_fuse: inputs must be c×h×w, got {[m.shape for m in maps]}")
        _, h1, w1 = maps[0].shape
        projected = [ops.bilinear_upsample(branch(x), h1, w1) for branch, x in zip(self.branches, maps)]
        return self.fuse(ops.concat(projected, axis=0))


def multiscale_fuse(
    x1: Tensor, x2: Tensor, x3: Tensor, x4_enriched: Tensor, fusion: MultiScaleFusion
) -> Tensor:
    return fusion([x1, x2, x3, x4_enriched])


class HeatmapDecoder(Module):
    """conv3×3 → relu → conv1×1 to one channel per body part → sigmoid."""

    def __init__(self, rng: SplitMix64, dim: int) -> None:
        super().__init__()
        self.hidden = self.child("hidden", Conv2d(rng.spawn(1), dim, dim, 3))
        self.head = self.child("head", Conv2d(rng.spawn(2), dim, NUM_PARTS, 1))

    def __call__(self, feat: Tensor) -> Tensor:
        return ops.sigmoid(self.head(ops.relu(self.hidden(feat))))


def decode(feat: Tensor, dec: HeatmapDecoder) -> Tensor:
    return dec(feat)
