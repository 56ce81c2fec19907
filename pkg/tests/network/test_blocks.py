"""Tests for attention, encoders, multi-scale fusion and the heatmap decoder."""

from typing import Callable, Tuple

import numpy as np
import pytest

from src.constants.parts import NUM_JOINTS, NUM_PARTS
from src.network.blocks import (
    CrossTransformerBlock,
    HeatmapDecoder,
    MultiScaleFusion,
    PartEmbeddingTable,
    PoseEncoder,
    PyramidEncoder,
    cross_transformer,
    decode,
    encode_image,
    multiscale_fuse,
    shp_text_guidance,
)
from src.network.module import Module
from src.numeric import SplitMix64, Tensor, backward, grad_check, ops, sample_indices
from src.utils.errors import ShapeError

STAGES = (8, 16, 24, 32)


def _weighted_sum(seed: int, shape: Tuple[int, ...]) -> Callable[[Tensor], Tensor]:
    weights = SplitMix64(500 + seed).normal(shape)
    return lambda y: ops.sum(y * weights)


def _zero(module: Module) -> None:
    for p in module.parameters():
        p.data = np.zeros_like(p.data)


def _gelu(x: float) -> float:
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x**3)))


# --- cross transformer ------------------------------------------------------


def test_zeroed_block_is_identity_on_query() -> None:
    """Test zero projections and zero MLP return x1 unchanged."""
    block = CrossTransformerBlock(SplitMix64(0), 8)
    _zero(block)
    rng = SplitMix64(1)
    x1, x2 = Tensor(rng.normal((4, 8))), Tensor(rng.normal((9, 8)))

    np.testing.assert_array_equal(cross_transformer(x1, x2, block).data, x1.data)


def test_output_shape_follows_query() -> None:
    """Test L1=4 queries against L2=9 keys give 4×c."""
    block = CrossTransformerBlock(SplitMix64(0), 8)
    rng = SplitMix64(2)

    out = block(Tensor(rng.normal((4, 8))), Tensor(rng.normal((9, 8))))

    assert out.shape == (4, 8)


def test_single_token_trace() -> None:
    """Test a 1-token 1-dim block against a hand-evaluated trace.

    LN of a single scalar returns its bias, so MCA = 0.5·3·2 = 3, Y = 3 + 2 = 5
    and O = Y + gelu(0.25) for the MLP routing LN2(Y) = 0.25 through one unit.
    """
    block = CrossTransformerBlock(SplitMix64(0), 1, mlp_ratio=2)
    _zero(block)
    block.ln1.bias.data[:] = 0.5
    block.w_q.data[:] = 1.7
    block.w_k.data[:] = -0.3
    block.w_v.data[:] = 3.0
    block.w_o.data[:] = 2.0
    x1 = Tensor([[2.0]])

    assert block(x1, Tensor([[-1.0]])).item() == pytest.approx(5.0)

    block.ln2.bias.data[:] = 0.25
    block.mlp.fc1.weight.data[:] = [[1.0, 0.0]]
    block.mlp.fc2.weight.data[:] = [[1.0], [0.0]]

    assert block(x1, Tensor([[-1.0]])).item() == pytest.approx(5.0 + _gelu(0.25))


def test_channel_mismatch_raises() -> None:
    """Test key/value streams of another width are rejected."""
    block = CrossTransformerBlock(SplitMix64(0), 8)

    with pytest.raises(ShapeError, match="key/value"):
        block(Tensor(np.zeros((2, 8))), Tensor(np.zeros((3, 6))))


@pytest.mark.parametrize("seed", range(20))
def test_cross_transformer_gradients(seed: int) -> None:
    """Test the block composite against finite differences in both streams."""
    block = CrossTransformerBlock(SplitMix64(seed), 4, mlp_ratio=2)
    rng = SplitMix64(100 + seed)
    x1, x2 = rng.normal((3, 4)), rng.normal((5, 4))
    weigh = _weighted_sum(seed, (3, 4))

    assert grad_check(lambda x: weigh(block(x, Tensor(x2))), x1) < 1e-4
    assert grad_check(lambda x: weigh(block(Tensor(x1), x)), x2) < 1e-4


def test_every_block_parameter_gets_gradient() -> None:
    """Test no cross-transformer parameter is dead on a generic input."""
    block = CrossTransformerBlock(SplitMix64(3), 4, mlp_ratio=2)
    rng = SplitMix64(4)
    out = block(Tensor(rng.normal((3, 4))), Tensor(rng.normal((5, 4))))

    backward(_weighted_sum(0, (3, 4))(out))

    for name, p in block.named_parameters():
        assert p.grad is not None and np.abs(p.grad).max() > 0, name


# --- text guidance ----------------------------------------------------------


def test_text_guidance_zero_block_returns_image_tokens() -> None:
    """Test a zeroed block passes the image tokens through."""
    block = CrossTransformerBlock(SplitMix64(0), 8)
    _zero(block)
    x_in = Tensor(SplitMix64(1).normal((4, 8)))
    x_t = PartEmbeddingTable(SplitMix64(2), 8)()

    np.testing.assert_array_equal(shp_text_guidance(x_in, x_t, block).data, x_in.data)


def test_text_guidance_reaches_every_part_embedding() -> None:
    """Test all seven embedding rows receive gradient through the key/value concat."""
    table = PartEmbeddingTable(SplitMix64(2), 8)
    block = CrossTransformerBlock(SplitMix64(0), 8)
    x_in = Tensor(SplitMix64(1).normal((4, 8)))

    backward(_weighted_sum(1, (4, 8))(shp_text_guidance(x_in, table(), block)))

    assert table.weight.grad is not None
    assert np.all(np.abs(table.weight.grad).sum(axis=1) > 0)


def test_part_table_lookup() -> None:
    """Test lookup by index returns the matching rows."""
    table = PartEmbeddingTable(SplitMix64(0), 4)

    rows = table([2, 0])

    np.testing.assert_array_equal(rows.data, table.weight.data[[2, 0]])
    assert table().shape == (NUM_PARTS, 4)
    with pytest.raises(ShapeError):
        table([NUM_PARTS])


# --- encoders ---------------------------------------------------------------


@pytest.mark.parametrize(
    ("size", "expected"),
    [(64, (16, 8, 4, 2)), (96, (24, 12, 6, 3))],
)
def test_pyramid_stage_sizes(size: int, expected: Tuple[int, ...]) -> None:
    """Test four maps at strides 4, 8, 16, 32 with the configured widths."""
    enc = PyramidEncoder(SplitMix64(0), STAGES)
    img = Tensor(SplitMix64(1).uniform((3, size, size)))

    features = encode_image(img, enc)

    assert [f.shape[1] for f in features] == list(expected)
    assert [f.shape[2] for f in features] == list(expected)
    assert [f.shape[0] for f in features] == list(STAGES)


def test_pyramid_rejects_indivisible_size() -> None:
    """Test a 100×100 image is refused."""
    enc = PyramidEncoder(SplitMix64(0), STAGES)

    with pytest.raises(ShapeError, match="divisible by 32"):
        enc(Tensor(np.zeros((3, 100, 100))))


@pytest.mark.parametrize("seed", range(20))
def test_pyramid_gradients_on_sampled_pixels(seed: int) -> None:
    """Test encoder output sensitivity to input pixels."""
    enc = PyramidEncoder(SplitMix64(seed), (4, 4, 4, 4), mlp_ratio=2)
    x0 = SplitMix64(100 + seed).uniform((3, 32, 32))
    weights = [SplitMix64(200 + 10 * seed + i).normal((4, n, n)) for i, n in enumerate((8, 4, 2, 1))]

    def loss(x: Tensor) -> Tensor:
        return ops.concat(
            [ops.reshape(ops.sum(f * w), (1,)) for f, w in zip(enc(x), weights)], axis=0
        ).sum()

    assert grad_check(loss, x0, indices=sample_indices(x0.size, 20, seed=seed)) < 1e-4


def test_pose_encoder_shape() -> None:
    """Test 53×3 joints become 53×c tokens and other shapes are refused."""
    enc = PoseEncoder(SplitMix64(0), 8, layers=2)

    assert enc(Tensor(SplitMix64(1).uniform((NUM_JOINTS, 3)))).shape == (NUM_JOINTS, 8)
    with pytest.raises(ShapeError):
        enc(Tensor(np.zeros((17, 3))))


# --- multi-scale fusion and decoder -----------------------------------------


def _stage_maps(rng: SplitMix64, fill: Callable[[Tuple[int, ...]], np.ndarray]) -> list:
    shapes = [(8, 16, 16), (16, 8, 8), (24, 4, 4), (16, 2, 2)]
    return [Tensor(fill(s)) for s in shapes]


def test_multiscale_output_is_finest_grid() -> None:
    """Test the fused map has c channels on the stage-1 grid."""
    fusion = MultiScaleFusion(SplitMix64(0), (8, 16, 24, 16), 16)
    rng = SplitMix64(1)

    out = multiscale_fuse(*_stage_maps(rng, rng.normal), fusion=fusion)

    assert out.shape == (16, 16, 16)


def test_multiscale_zero_inputs_give_zero() -> None:
    """Test linearity: zero maps and zero biases fuse to zero."""
    fusion = MultiScaleFusion(SplitMix64(0), (8, 16, 24, 16), 16)

    out = fusion(_stage_maps(SplitMix64(1), np.zeros))

    np.testing.assert_array_equal(out.data, 0.0)


def test_multiscale_preserves_constant_maps() -> None:
    """Test per-channel constant inputs yield a per-channel constant output."""
    fusion = MultiScaleFusion(SplitMix64(0), (8, 16, 24, 16), 16)
    rng = SplitMix64(2)

    def constant(shape: Tuple[int, ...]) -> np.ndarray:
        return np.broadcast_to(rng.normal((shape[0], 1, 1)), shape).copy()

    out = fusion(_stage_maps(rng, constant)).data

    np.testing.assert_allclose(out, np.broadcast_to(out[:, :1, :1], out.shape), atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_multiscale_gradients(seed: int) -> None:
    """Test the fused map against finite differences in every stage."""
    fusion = MultiScaleFusion(SplitMix64(seed), (2, 2, 2, 3), 3)
    rng = SplitMix64(100 + seed)
    stages = [rng.normal(s) for s in [(2, 8, 8), (2, 4, 4), (2, 2, 2), (3, 1, 1)]]
    weigh = _weighted_sum(seed, (3, 8, 8))

    for i in range(4):

        def loss(x: Tensor, i: int = i) -> Tensor:
            maps = [Tensor(s) for s in stages]
            maps[i] = x
            return weigh(fusion(maps))

        assert grad_check(loss, stages[i]) < 1e-4, f"stage {i + 1}"


def test_decoder_zero_weights_give_half() -> None:
    """Test sigmoid(0) everywhere with seven channels."""
    dec = HeatmapDecoder(SplitMix64(0), 8)
    _zero(dec)

    out = decode(Tensor(SplitMix64(1).normal((8, 5, 6))), dec)

    assert out.shape == (NUM_PARTS, 5, 6)
    np.testing.assert_array_equal(out.data, 0.5)


def test_decoder_saturates_with_large_bias() -> None:
    """Test a final bias of 10 pushes every value above 0.9999."""
    dec = HeatmapDecoder(SplitMix64(0), 8)
    _zero(dec)
    dec.head.bias.data[:] = 10.0

    assert dec(Tensor(np.ones((8, 3, 3)))).data.min() > 0.9999


@pytest.mark.parametrize("seed", range(20))
def test_decoder_range_and_gradients(seed: int) -> None:
    """Test outputs stay in (0, 1) and match finite differences."""
    dec = HeatmapDecoder(SplitMix64(seed), 3)
    x0 = SplitMix64(100 + seed).normal((3, 4, 4))
    out = dec(Tensor(x0)).data

    assert out.min() > 0.0 and out.max() < 1.0
    assert grad_check(lambda x: _weighted_sum(seed, (NUM_PARTS, 4, 4))(dec(x)), x0) < 1e-4
