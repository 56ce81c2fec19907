"""Models for run, training, model and solver configuration."""

import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.constants import defaults
from src.models.splits import SplitKind
from src.utils.errors import ConfigError, DataError
from src.utils.io.json import load_json

logger = logging.getLogger(__name__)


class SolverConfig(BaseModel):
    """Fixed-point solver settings shared by forward and adjoint solves."""

    model_config = ConfigDict(extra="forbid")

    tol: float = Field(default=defaults.SOLVER_TOL, gt=0)
    max_iter: int = Field(default=defaults.SOLVER_MAX_ITER, ge=1)
    anderson_memory: int = Field(default=defaults.ANDERSON_MEMORY, ge=1)
    damping: float = Field(default=defaults.DAMPING, gt=0, le=1)
    method: Literal["anderson", "picard"] = "anderson"
    neumann_terms: int = Field(default=defaults.NEUMANN_TERMS, ge=1)


class FusionConfig(BaseModel):
    """Which fusion layer realizes every DEQFuse call site."""

    model_config = ConfigDict(extra="forbid")

    mode: Literal["deq", "unrolled", "stacked"] = "deq"
    n_layer: int = Field(default=1, ge=1)  # applications of one operator in "unrolled"
    depth: int = Field(default=1, ge=1)  # distinct operators in "stacked"
    shared_pose_operator: bool = False  # SHP and GAT two-source fusions share weights


class ModelConfig(BaseModel):
    """Network widths and input size."""

    model_config = ConfigDict(extra="forbid")

    image_size: int = defaults.IMAGE_SIZE
    channels: int = Field(default=defaults.CHANNELS, ge=1)
    stage_channels: Tuple[int, int, int, int] = defaults.STAGE_CHANNELS
    reduction_ratios: Tuple[int, int, int, int] = defaults.REDUCTION_RATIOS
    mlp_ratio: int = Field(default=defaults.MLP_RATIO, ge=1)
    pose_layers: int = Field(default=defaults.POSE_LAYERS, ge=0)

    @field_validator("image_size")
    @classmethod
    def divisible_by_32(cls, value: int) -> int:
        if value < defaults.SIZE_MULTIPLE or value % defaults.SIZE_MULTIPLE:
            raise ValueError(f"image_size must be a positive multiple of {defaults.SIZE_MULTIPLE}")
        return value


class AblationConfig(BaseModel):
    """Components removed from the model; True means the component is ablated."""

    model_config = ConfigDict(extra="forbid")

    text: bool = False
    pose: bool = False
    apparent: bool = False

    def labels(self) -> list:
        return [name for name in ("text", "pose", "apparent") if getattr(self, name)]


class TrainConfig(BaseModel):
    """Everything a training or evaluation run needs besides data paths."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    seed: int = 0
    lr: float = Field(default=defaults.LEARNING_RATE, ge=0)
    weight_decay: float = Field(default=defaults.WEIGHT_DECAY, ge=0)
    steps: int = Field(default=100, ge=0)
    batch: Optional[int] = Field(default=None, ge=1)
    loss_weights: Tuple[float, float, float] = Field(default=defaults.LOSS_WEIGHTS, alias="lambda")
    ablations: AblationConfig = AblationConfig()
    solver: SolverConfig = SolverConfig()
    fusion: FusionConfig = FusionConfig()
    model: ModelConfig = ModelConfig()
    split: SplitKind = SplitKind.SEEN
    flip: bool = True
    teacher_forcing: bool = True
    log_every: int = Field(default=10, ge=1)

    @property
    def batch_size(self) -> int:
        """Configured batch, else 24 (12 for the affordance-unseen split)."""
        if self.batch is not None:
            return self.batch
        if self.split == SplitKind.AFF_UNSEEN:
            return defaults.BATCH_SIZE_AFF_UNSEEN
        return defaults.BATCH_SIZE

    @classmethod
    def from_file(cls, path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> "TrainConfig":
        """Load a JSON (or YAML) config and apply flag overrides on top.

        Raises:
            ConfigError: If the file holds invalid values.
        """
        path = Path(path)
        if path.suffix.lower() in (".yaml", ".yml"):
            try:
                raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            except FileNotFoundError:
                raise ConfigError(f"{path}: config file not found") from None
            except yaml.YAMLError as e:
                raise ConfigError(f"{path}: invalid YAML: {e}") from None
        else:
            try:
                raw = load_json(path)
            except DataError as e:
                raise ConfigError(str(e)) from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        return cls.from_dict(raw, overrides)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> "TrainConfig":
        merged = _deep_merge(raw, overrides or {})
        try:
            return cls.model_validate(merged)
        except ValidationError as e:
            raise ConfigError(f"invalid training config: {e}") from None

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


class RunConfig(BaseModel):
    """Resolved parameters of one command invocation, written as resolved_config.json."""

    command: str
    seed: int
    output_dir: str
    parameters: Dict[str, Any] = {}
    train: Optional[TrainConfig] = None
    versions: Dict[str, str] = {}

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged
