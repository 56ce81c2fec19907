"""Tests for parameter containers and initializers."""

import numpy as np
import pytest

from src.network.layers import MLP, Conv2d, Linear, map_to_tokens, tokens_to_map
from src.network.module import Module, spectral_normalize
from src.numeric import SplitMix64, Tensor
from src.utils.errors import CheckpointError, ShapeError


class _Pair(Module):
    def __init__(self) -> None:
        super().__init__()
        self.a = self.child("a", Linear(SplitMix64(1), 3, 2))
        self.b = self.child("b", MLP(SplitMix64(2), 2, 2))


def test_named_parameters_use_dotted_paths() -> None:
    """Test child parameters are prefixed by the child name."""
    names = [name for name, _ in _Pair().named_parameters()]

    assert names == [
        "a.weight",
        "a.bias",
        "b.fc1.weight",
        "b.fc1.bias",
        "b.fc2.weight",
        "b.fc2.bias",
    ]


def test_shared_child_is_counted_once() -> None:
    """Test a module registered under two names contributes its tensors once."""
    model = Module()
    shared = Linear(SplitMix64(0), 2, 2)
    model.child("first", shared)
    model.child("second", shared)

    assert len(model.parameters()) == 2
    assert set(model.state_dict()) == {"first.weight", "first.bias"}


def test_state_dict_round_trip() -> None:
    """Test loading a state dict restores every parameter."""
    source, target = _Pair(), _Pair()
    for p in target.parameters():
        p.data = np.zeros_like(p.data)

    target.load_state_dict(source.state_dict())

    for (name, p), (_, q) in zip(source.named_parameters(), target.named_parameters()):
        np.testing.assert_array_equal(p.data, q.data, err_msg=name)


def test_load_state_dict_rejects_mismatch() -> None:
    """Test missing names and wrong shapes raise CheckpointError."""
    model = _Pair()
    state = model.state_dict()
    del state["a.bias"]
    with pytest.raises(CheckpointError, match="missing"):
        model.load_state_dict(state)

    state = model.state_dict()
    state["a.weight"] = np.zeros((2, 2))
    with pytest.raises(CheckpointError, match="shape"):
        model.load_state_dict(state)


def test_spectral_normalize_sets_largest_singular_value() -> None:
    """Test the rescaled matrix has spectral norm equal to the target."""
    w = SplitMix64(3).normal((6, 6))

    scaled = spectral_normalize(w, 0.9)

    assert np.linalg.norm(scaled, ord=2) == pytest.approx(0.9)
    np.testing.assert_array_equal(spectral_normalize(np.zeros((2, 2)), 0.9), 0.0)


def test_linear_rejects_wrong_width() -> None:
    """Test Linear names the expected width in its error."""
    with pytest.raises(ShapeError, match="L×3"):
        Linear(SplitMix64(0), 3, 2)(Tensor(np.zeros((4, 5))))


def test_token_map_round_trip() -> None:
    """Test map→tokens→map is the identity and tokens are pixel-major."""
    x = SplitMix64(4).normal((3, 2, 5))
    tokens = map_to_tokens(Tensor(x))

    assert tokens.shape == (10, 3)
    np.testing.assert_array_equal(tokens.data[6], x[:, 1, 1])
    np.testing.assert_array_equal(tokens_to_map(tokens, 2, 5).data, x)


def test_conv_keeps_spatial_size() -> None:
    """Test 3×3 convolution output matches the input grid."""
    conv = Conv2d(SplitMix64(5), 4, 6, 3)

    assert conv(Tensor(np.ones((4, 7, 9)))).shape == (6, 7, 9)
