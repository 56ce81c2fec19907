"""Differentiable primitives.

Every function takes and returns ``Tensor`` objects and registers a
vector-Jacobian product when any input requires gradients. Image-like
tensors are channel-first (``c×h×w``); token sequences are ``L×c``.
"""

import builtins
import logging
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from src.numeric.tensor import DEFAULT_DTYPE, Tensor
from src.utils.errors import ConfigError, DataError, ShapeError

logger = logging.getLogger(__name__)

Operand = Union[Tensor, np.ndarray, float, int]
Axis = Optional[Union[int, Tuple[int, ...]]]

SUPPORTED_KERNELS = (1, 3)
LAYERNORM_EPS = 1e-5
BCE_EPS = 1e-7
GELU_COEF = 0.044715
_SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


def as_tensor(value: Operand) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=DEFAULT_DTYPE))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> Tuple[int, ...]:
    try:
        return tuple(np.broadcast_shapes(a.shape, b.shape))
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}") from None


def _normalize_axis(x: Tensor, axis: int, op: str) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"{op}: axis {axis} out of range for shape {x.shape}")
    return axis % x.ndim


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), vjp, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), vjp, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), vjp, "mul")


def div(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    out = a.data / b.data

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * out / b.data, b.shape),
        )

    return Tensor.from_op(out, (a, b), vjp, "div")


def neg(x: Tensor) -> Tensor:
    return Tensor.from_op(-x.data, (x,), lambda g: (-g,), "neg")


def scale(x: Tensor, factor: float) -> Tensor:
    factor = float(factor)
    return Tensor.from_op(x.data * factor, (x,), lambda g: (g * factor,), "scale")


# ---------------------------------------------------------------------------
# linear algebra and layout
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Product of an ``m×k`` and a ``k×n`` matrix."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return g @ b.data.T, a.data.T @ g

    return Tensor.from_op(a.data @ b.data, (a, b), vjp, "matmul")


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    order = tuple(range(x.ndim))[::-1] if axes is None else tuple(axes)
    if sorted(order) != list(range(x.ndim)):
        raise ShapeError(f"transpose: axes {order} invalid for shape {x.shape}")
    inverse = tuple(np.argsort(order))
    return Tensor.from_op(
        x.data.transpose(order), (x,), lambda g: (g.transpose(inverse),), "transpose"
    )


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {x.shape} into {tuple(shape)}") from None
    return Tensor.from_op(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    """Expand ``x`` to ``shape`` under numpy broadcasting rules."""
    shape = tuple(shape)
    try:
        out = np.broadcast_to(x.data, shape).copy()
    except ValueError:
        raise ShapeError(f"broadcast_to: cannot expand {x.shape} to {shape}") from None
    return Tensor.from_op(
        out, (x,), lambda g: (_unbroadcast(g, x.shape),), "broadcast_to"
    )


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: needs at least one tensor")
    tensors = [as_tensor(t) for t in tensors]
    axis = _normalize_axis(tensors[0], axis, "concat")
    for t in tensors[1:]:
        if t.ndim != tensors[0].ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(t.ndim) if i != axis
        ):
            raise ShapeError(
                f"concat: shapes {tensors[0].shape} and {t.shape} differ off axis {axis}"
            )
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(np.split(g, cuts, axis=axis))

    out = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor.from_op(out, tensors, vjp, "concat")


def split(x: Tensor, sizes: Sequence[int], axis: int = 0) -> List[Tensor]:
    axis = _normalize_axis(x, axis, "split")
    sizes = [int(s) for s in sizes]
    if builtins.sum(sizes) != x.shape[axis] or any(s < 0 for s in sizes):
        raise ShapeError(
            f"split: sizes {sizes} do not partition extent {x.shape[axis]} of {x.shape}"
        )
    pieces = []
    start = 0
    for size in sizes:
        index: List[Any] = [slice(None)] * x.ndim
        index[axis] = slice(start, start + size)
        region = tuple(index)

        def vjp(g: np.ndarray, region: Tuple[Any, ...] = region) -> Tuple[np.ndarray]:
            full = np.zeros_like(x.data)
            full[region] = g
            return (full,)

        pieces.append(Tensor.from_op(x.data[region].copy(), (x,), vjp, "split"))
        start += size
    return pieces


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


def _expand_reduced(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis, int) else axis
        g = np.expand_dims(g, tuple(a % len(shape) for a in axes))
    return np.broadcast_to(g, shape)


def sum(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.array(_expand_reduced(g, x.shape, axis, keepdims)),)

    return Tensor.from_op(out, (x,), vjp, "sum")


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    out = x.data.mean(axis=axis, keepdims=keepdims)
    count = x.data.size / max(out.size, 1)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.array(_expand_reduced(g, x.shape, axis, keepdims)) / count,)

    return Tensor.from_op(out, (x,), vjp, "mean")


def global_mean_pool(x: Tensor) -> Tensor:
    """Average a ``c×h×w`` map over space, giving a ``c`` vector."""
    if x.ndim != 3:
        raise ShapeError(f"global_mean_pool: expected c×h×w, got {x.shape}")
    return mean(x, axis=(1, 2))


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor.from_op(x.data * mask, (x,), lambda g: (g * mask,), "relu")


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    v = x.data
    t = np.tanh(_SQRT_2_OVER_PI * (v + GELU_COEF * v**3))
    out = 0.5 * v * (1.0 + t)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        d_inner = _SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEF * v**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t**2) * d_inner),)

    return Tensor.from_op(out, (x,), vjp, "gelu")


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)
    return Tensor.from_op(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return Tensor.from_op(out, (x,), lambda g: (g * out,), "exp")


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise DataError("log: input must be strictly positive")
    return Tensor.from_op(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    axis = _normalize_axis(x, axis, "softmax")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(out, (x,), vjp, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    axis = _normalize_axis(x, axis, "log_softmax")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return Tensor.from_op(out, (x,), vjp, "log_softmax")


def layernorm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYERNORM_EPS) -> Tensor:
    """Normalize over the last axis, then apply a per-channel affine map."""
    c = x.shape[-1]
    if gain.shape != (c,) or bias.shape != (c,):
        raise ShapeError(
            f"layernorm: gain {gain.shape} / bias {bias.shape} do not match channels of {x.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    out = xhat * gain.data + bias.data

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        gx_hat = g * gain.data
        gx = inv_std * (
            gx_hat
            - gx_hat.mean(axis=-1, keepdims=True)
            - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True)
        )
        lead = tuple(range(x.ndim - 1))
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return Tensor.from_op(out, (x, gain, bias), vjp, "layernorm")


# ---------------------------------------------------------------------------
# spatial operations on c×h×w maps
# ---------------------------------------------------------------------------


def _require_map(x: Tensor, op: str) -> Tuple[int, int, int]:
    if x.ndim != 3:
        raise ShapeError(f"{op}: expected c×h×w, got {x.shape}")
    return x.shape[0], x.shape[1], x.shape[2]


def conv2d(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Same-size cross-correlation with zero padding ``(k-1)/2``.

    Raises:
        ConfigError: kernel size outside ``SUPPORTED_KERNELS``.
        ShapeError: channel or layout mismatch.
    """
    if kernel.ndim != 4 or kernel.shape[2] != kernel.shape[3]:
        raise ShapeError(f"conv2d: kernel must be c_out×c_in×k×k, got {kernel.shape}")
    k = kernel.shape[-1]
    if k not in SUPPORTED_KERNELS:
        raise ConfigError(f"conv2d: unsupported kernel size {k}, expected one of {SUPPORTED_KERNELS}")
    c_in, h, w = _require_map(x, "conv2d")
    c_out = kernel.shape[0]
    if kernel.shape[1] != c_in:
        raise ShapeError(f"conv2d: input {x.shape} does not match kernel {kernel.shape}")
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError(f"conv2d: bias {bias.shape} does not match {c_out} output channels")

    pad = (k - 1) // 2
    offsets = [(di, dj) for di in range(k) for dj in range(k)]
    if k == 1:
        cols = x.data.reshape(c_in, h * w)
    else:
        padded = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad)))
        cols = np.stack(
            [padded[:, di : di + h, dj : dj + w] for di, dj in offsets], axis=1
        ).reshape(c_in * k * k, h * w)
    kmat = kernel.data.reshape(c_out, c_in * k * k)
    out = (kmat @ cols).reshape(c_out, h, w)
    if bias is not None:
        out = out + bias.data[:, None, None]

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, ...]:
        g2 = g.reshape(c_out, h * w)
        g_kernel = (g2 @ cols.T).reshape(kernel.shape)
        g_cols = kmat.T @ g2
        if k == 1:
            g_x = g_cols.reshape(c_in, h, w)
        else:
            g_cols = g_cols.reshape(c_in, k * k, h, w)
            g_pad = np.zeros((c_in, h + 2 * pad, w + 2 * pad))
            for idx, (di, dj) in enumerate(offsets):
                g_pad[:, di : di + h, dj : dj + w] += g_cols[:, idx]
            g_x = g_pad[:, pad : pad + h, pad : pad + w]
        if bias is None:
            return g_x, g_kernel
        return g_x, g_kernel, g2.sum(axis=1)

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return Tensor.from_op(out, parents, vjp, "conv2d")


def interpolation_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic ``n_out×n_in`` linear interpolation, half-pixel centers."""
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    rows = np.arange(n_out)
    m = np.zeros((n_out, n_in))
    np.add.at(m, (rows, lo), 1.0 - frac)
    np.add.at(m, (rows, hi), frac)
    return m


def bilinear_upsample(x: Tensor, target_h: int, target_w: int) -> Tensor:
    _, h, w = _require_map(x, "bilinear_upsample")
    if target_h < h or target_w < w:
        raise ShapeError(
            f"bilinear_upsample: cannot downscale {h}×{w} to {target_h}×{target_w}"
        )
    if (target_h, target_w) == (h, w):
        return x
    my = interpolation_matrix(h, target_h)
    mx = interpolation_matrix(w, target_w)
    out = my @ x.data @ mx.T

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        return (my.T @ g @ mx,)

    return Tensor.from_op(out, (x,), vjp, "bilinear_upsample")


def avg_pool2d(x: Tensor, factor: int) -> Tensor:
    """Non-overlapping ``factor×factor`` average pooling."""
    c, h, w = _require_map(x, "avg_pool2d")
    if factor < 1 or h % factor or w % factor:
        raise ShapeError(f"avg_pool2d: factor {factor} does not divide {h}×{w}")
    if factor == 1:
        return x
    out = x.data.reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        spread = np.repeat(np.repeat(g, factor, axis=1), factor, axis=2)
        return (spread / (factor * factor),)

    return Tensor.from_op(out, (x,), vjp, "avg_pool2d")


def space_to_depth(x: Tensor, factor: int) -> Tensor:
    """Fold ``factor×factor`` blocks into channels: ``c×h×w → (c·f²)×(h/f)×(w/f)``."""
    c, h, w = _require_map(x, "space_to_depth")
    if factor < 1 or h % factor or w % factor:
        raise ShapeError(f"space_to_depth: factor {factor} does not divide {h}×{w}")
    f = factor
    out = (
        x.data.reshape(c, h // f, f, w // f, f)
        .transpose(0, 2, 4, 1, 3)
        .reshape(c * f * f, h // f, w // f)
    )

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        return (
            g.reshape(c, f, f, h // f, w // f).transpose(0, 3, 1, 4, 2).reshape(c, h, w),
        )

    return Tensor.from_op(out, (x,), vjp, "space_to_depth")


# ---------------------------------------------------------------------------
# losses and gradient control
# ---------------------------------------------------------------------------


def bce_loss(pred: Tensor, target: Operand, eps: float = BCE_EPS) -> Tensor:
    """Mean binary cross-entropy against continuous targets in [0, 1]."""
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"bce_loss: prediction {pred.shape} vs target {target.shape}")
    p = np.clip(pred.data, eps, 1.0 - eps)
    t = target.data
    n = p.size
    value = -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)).mean()

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        g_pred = g * (p - t) / (p * (1.0 - p)) / n
        g_target = g * (np.log(1.0 - p) - np.log(p)) / n
        return g_pred, g_target

    return Tensor.from_op(np.asarray(value), (pred, target), vjp, "bce_loss")


def detach(x: Tensor) -> Tensor:
    """Same values, no gradient path."""
    return Tensor(x.data)
