"""AdamW with decoupled weight decay."""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from src.constants import defaults
from src.numeric import Tensor
from src.utils.errors import CheckpointError

logger = logging.getLogger(__name__)


class AdamW:
    """``p ← p·(1 − lr·wd) − lr·m̂/(√v̂ + eps)`` over named parameters.

    Moments are keyed by parameter name so they survive a checkpoint round trip.
    """

    def __init__(
        self,
        params: List[Tuple[str, Tensor]],
        lr: float = defaults.LEARNING_RATE,
        betas: Tuple[float, float] = defaults.BETAS,
        eps: float = defaults.ADAM_EPS,
        weight_decay: float = defaults.WEIGHT_DECAY,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.params}
        self.v: Dict[str, np.ndarray] = {name: np.zeros_like(p.data) for name, p in self.params}

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.zero_grad()

    def step(self, scale: float = 1.0) -> None:
        """Apply one update using ``scale · p.grad`` as the gradient."""
        beta1, beta2 = self.betas
        self.step_count += 1
        bias1 = 1.0 - beta1**self.step_count
        bias2 = 1.0 - beta2**self.step_count
        for name, p in self.params:
            g = np.zeros_like(p.data) if p.grad is None else p.grad * scale
            self.m[name] = beta1 * self.m[name] + (1.0 - beta1) * g
            self.v[name] = beta2 * self.v[name] + (1.0 - beta2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            decayed = p.data * (1.0 - self.lr * self.weight_decay)
            p.data = decayed - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_dict(self) -> Dict[str, Any]:
        return {"step": self.step_count, "m": dict(self.m), "v": dict(self.v)}

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        """Restore moments and step count.

        Raises:
            CheckpointError: If moment names or shapes disagree with the parameters.
        """
        m, v = state["m"], state["v"]
        for name, p in self.params:
            if name not in m or name not in v:
                raise CheckpointError(f"optimizer state has no moments for {name}")
            if np.shape(m[name]) != p.shape or np.shape(v[name]) != p.shape:
                raise CheckpointError(f"optimizer moments for {name} do not match shape {p.shape}")
            self.m[name] = np.asarray(m[name], dtype=np.float64).copy()
            self.v[name] = np.asarray(v[name], dtype=np.float64).copy()
        self.step_count = int(state["step"])
