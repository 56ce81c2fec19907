"""Seeded SplitMix64 stream used for every random draw in the package.

Draws are produced in vectorized blocks, so a given seed yields the same
values on every platform regardless of numpy's own generator versions.
"""

import logging
from typing import Sequence, Tuple, TypeVar, Union

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
Shape = Union[int, Tuple[int, ...]]

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_TWO_POW_MINUS_53 = 1.0 / float(1 << 53)


def mix64(value: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def _count(shape: Shape) -> int:
    return int(np.prod(shape)) if isinstance(shape, tuple) else int(shape)


class SplitMix64:
    """64-bit SplitMix stream with numpy-shaped convenience draws."""

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & MASK64
        self._state = self.seed

    def spawn(self, key: int) -> "SplitMix64":
        """Independent child stream keyed by ``key``; does not advance this one."""
        return SplitMix64(mix64(self.seed + (int(key) + 1) * GOLDEN_GAMMA))

    def next_uint64(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(GOLDEN_GAMMA)
        self._state = (self._state + n * GOLDEN_GAMMA) & MASK64
        return _mix_array(z)

    def uniform(self, shape: Shape = 1, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Doubles in ``[low, high)`` built from the top 53 bits of each word."""
        n = _count(shape)
        bits = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64)
        u = bits * _TWO_POW_MINUS_53
        return (low + (high - low) * u).reshape(shape)

    def normal(self, shape: Shape = 1, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Gaussian draws via the Box-Muller transform."""
        n = _count(shape)
        pairs = (n + 1) // 2
        u1 = 1.0 - self.uniform(pairs)
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])
        return (mean + std * z[:n]).reshape(shape)

    def integers(self, low: int, high: int, shape: Shape = 1) -> np.ndarray:
        """Integers in ``[low, high)``."""
        span = high - low
        return (low + np.floor(self.uniform(shape) * span)).astype(np.int64)

    def integer(self, low: int, high: int) -> int:
        return int(self.integers(low, high, 1)[0])

    def scalar(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self.uniform(1, low, high)[0])

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")

    def shuffled(self, items: Sequence[T]) -> list:
        return [items[i] for i in self.permutation(len(items))]

    def choice(self, items: Sequence[T]) -> T:
        return items[self.integer(0, len(items))]
