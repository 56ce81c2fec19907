"""Token-major and map-major layers built from the numeric primitives."""

from typing import Optional

import numpy as np

from src.numeric import SplitMix64, Tensor, ops
from src.network.module import Module, he_normal, xavier_uniform
from src.utils.errors import ShapeError


def map_to_tokens(x: Tensor) -> Tensor:
    """``c×h×w`` map to ``(h·w)×c`` tokens, row-major over pixels."""
    c, h, w = x.shape
    return ops.transpose(ops.reshape(x, (c, h * w)))


def tokens_to_map(tokens: Tensor, h: int, w: int) -> Tensor:
    length, c = tokens.shape
    if length != h * w:
        raise ShapeError(f"{length} tokens cannot form a {h}×{w} map")
    return ops.reshape(ops.transpose(tokens), (c, h, w))


class Linear(Module):
    """``y = x W + b`` on ``L×in`` tokens."""

    def __init__(self, rng: SplitMix64, in_dim: int, out_dim: int, bias: bool = True) -> None:
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.weight = self.param("weight", xavier_uniform(rng, in_dim, out_dim))
        self.bias: Optional[Tensor] = self.param("bias", np.zeros(out_dim)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"Linear expects L×{self.in_dim}, got {x.shape}")
        y = ops.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, dim: int) -> None:
        super().__init__()
        self.gain = self.param("gain", np.ones(dim))
        self.bias = self.param("bias", np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layernorm(x, self.gain, self.bias)


class Conv2d(Module):
    """Same-size convolution on ``c×h×w`` maps, ``k`` in {1, 3}."""

    def __init__(self, rng: SplitMix64, in_ch: int, out_ch: int, k: int = 1) -> None:
        super().__init__()
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel = self.param("kernel", he_normal(rng, (out_ch, in_ch, k, k), in_ch * k * k))
        self.bias = self.param("bias", np.zeros(out_ch))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.kernel, self.bias)


class MLP(Module):
    """``c → ratio·c → c`` with GELU."""

    def __init__(self, rng: SplitMix64, dim: int, ratio: int) -> None:
        super().__init__()
        self.fc1 = self.child("fc1", Linear(rng.spawn(1), dim, dim * ratio))
        self.fc2 = self.child("fc2", Linear(rng.spawn(2), dim * ratio, dim))

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(ops.gelu(self.fc1(x)))
