"""Tests for the AdamW update."""

import numpy as np
import pytest

from src.network.optim import AdamW
from src.numeric import SplitMix64, Tensor, backward, ops
from src.utils.errors import CheckpointError


def _params() -> list:
    rng = SplitMix64(0)
    return [("w", Tensor(rng.normal((3, 2)), requires_grad=True)), ("b", Tensor(rng.normal(2), requires_grad=True))]


def _loss(params: list) -> Tensor:
    return ops.sum(params[0][1] * params[0][1]) + ops.sum(params[1][1])


def test_zero_learning_rate_leaves_parameters_bit_identical() -> None:
    """Test lr = 0 performs a null update."""
    params = _params()
    before = [p.data.copy() for _, p in params]
    opt = AdamW(params, lr=0.0)

    backward(_loss(params))
    opt.step()

    for (_, p), old in zip(params, before):
        np.testing.assert_array_equal(p.data, old)


def test_first_step_moves_by_learning_rate() -> None:
    """Test bias correction makes the first step lr·sign(g) plus decay."""
    params = _params()
    before = [p.data.copy() for _, p in params]
    opt = AdamW(params, lr=1e-2, weight_decay=0.01)

    backward(_loss(params))
    grads = [p.grad.copy() for _, p in params]
    opt.step()

    for (_, p), old, g in zip(params, before, grads):
        expected = old * (1 - 1e-2 * 0.01) - 1e-2 * g / (np.abs(g) + 1e-8)
        np.testing.assert_allclose(p.data, expected, rtol=1e-10)
    assert opt.step_count == 1


def test_scale_averages_accumulated_gradients() -> None:
    """Test step(scale) treats scale·grad as the gradient."""
    a, b = _params(), _params()
    opt_a, opt_b = AdamW(a, lr=1e-2), AdamW(b, lr=1e-2)

    backward(_loss(a))
    backward(_loss(b))
    backward(_loss(b))
    opt_a.step()
    opt_b.step(scale=0.5)

    for (_, p), (_, q) in zip(a, b):
        np.testing.assert_allclose(p.data, q.data, rtol=1e-12)


def test_state_round_trip_and_mismatch() -> None:
    """Test moments reload into a fresh optimizer and mismatches raise."""
    params = _params()
    opt = AdamW(params, lr=1e-2)
    backward(_loss(params))
    opt.step()

    fresh = AdamW(params, lr=1e-2)
    fresh.load_state_dict(opt.state_dict())

    assert fresh.step_count == 1
    np.testing.assert_array_equal(fresh.m["w"], opt.m["w"])
    bad = opt.state_dict()
    bad["v"] = {"w": np.zeros((2, 2)), "b": np.zeros(2)}
    with pytest.raises(CheckpointError):
        fresh.load_state_dict(bad)
