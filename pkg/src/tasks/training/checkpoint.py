"""Saving and restoring model, optimizer and configuration together."""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from src.models.config import TrainConfig
from src.network.optim import AdamW
from src.network.vcrnet import VCRNet
from src.utils.errors import CheckpointError
from src.utils.io.checkpoints import Checkpoint, load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)


def build_model(config: TrainConfig) -> Tuple[VCRNet, AdamW]:
    """Fresh model and optimizer for a training configuration."""
    model = VCRNet(config.model, config.fusion, config.solver, config.ablations, seed=config.seed)
    optimizer = AdamW(model.unique_named_parameters(), lr=config.lr, weight_decay=config.weight_decay)
    return model, optimizer


def save_training_state(
    directory: Union[str, Path], model: VCRNet, optimizer: AdamW, config: TrainConfig, step: int
) -> Path:
    metadata = {"step": step, "seed": config.seed, "config": config.dump()}
    return save_checkpoint(directory, model.state_dict(), metadata, optimizer.state_dict())


def restore_training_state(
    directory: Union[str, Path], config: Optional[TrainConfig] = None
) -> Tuple[VCRNet, AdamW, TrainConfig, Checkpoint]:
    """Rebuild model and optimizer from a checkpoint.

    Args:
        directory: Checkpoint directory
        config: Configuration to build with; defaults to the one stored in the checkpoint

    Raises:
        CheckpointError: If the checkpoint has no stored configuration or does not fit the model
    """
    checkpoint = load_checkpoint(directory)
    if config is None:
        if "config" not in checkpoint.metadata:
            raise CheckpointError(f"{directory}: checkpoint carries no training configuration")
        config = TrainConfig.from_dict(checkpoint.metadata["config"])
    model, optimizer = build_model(config)
    model.load_state_dict(checkpoint.params)
    if checkpoint.optimizer is not None:
        optimizer.load_state_dict(checkpoint.optimizer)
    logger.info(f"Restored checkpoint {directory} at step {checkpoint.step}")
    return model, optimizer, config, checkpoint
