"""Parameter containers.

A ``Module`` owns named leaf tensors and child modules; parameter names are
dotted paths (``shp.fusion.op0.w_q.0``) that double as checkpoint keys.
"""

import logging
from typing import Dict, Iterator, List, Tuple, TypeVar

import numpy as np

from src.numeric import SplitMix64, Tensor
from src.utils.errors import CheckpointError

logger = logging.getLogger(__name__)

M = TypeVar("M", bound="Module")


class Module:
    """Base class for everything with trainable parameters."""

    def __init__(self) -> None:
        self._params: Dict[str, Tensor] = {}
        self._children: Dict[str, "Module"] = {}

    def param(self, name: str, value: np.ndarray) -> Tensor:
        tensor = Tensor(value, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def child(self, name: str, module: M) -> M:
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, tensor in self._params.items():
            yield f"{prefix}{name}", tensor
        for name, module in self._children.items():
            yield from module.named_parameters(f"{prefix}{name}.")

    def unique_named_parameters(self) -> List[Tuple[str, Tensor]]:
        """Named parameters with shared tensors listed once, under their first name."""
        seen: Dict[int, Tuple[str, Tensor]] = {}
        for name, tensor in self.named_parameters():
            seen.setdefault(id(tensor), (name, tensor))
        return list(seen.values())

    def parameters(self) -> List[Tensor]:
        return [tensor for _, tensor in self.unique_named_parameters()]

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.unique_named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy arrays into parameters; names and shapes must match exactly.

        Raises:
            CheckpointError: On missing, unexpected or mis-shaped entries.
        """
        own = dict(self.unique_named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise CheckpointError(
                f"checkpoint does not match model: missing {missing[:5]}, unexpected {unexpected[:5]}"
            )
        for name, tensor in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(
                    f"checkpoint tensor {name} has shape {value.shape}, model expects {tensor.shape}"
                )
            tensor.data = value.copy()
            tensor.zero_grad()


def xavier_uniform(rng: SplitMix64, fan_in: int, fan_out: int) -> np.ndarray:
    bound = float(np.sqrt(6.0 / (fan_in + fan_out)))
    return rng.uniform((fan_in, fan_out), -bound, bound)


def he_normal(rng: SplitMix64, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    return rng.normal(shape, std=float(np.sqrt(2.0 / fan_in)))


def spectral_normalize(weight: np.ndarray, target: float) -> np.ndarray:
    """Rescale ``weight`` so its largest singular value equals ``target``."""
    sigma = float(np.linalg.norm(weight, ord=2))
    if sigma == 0.0:
        return weight
    return weight * (target / sigma)
