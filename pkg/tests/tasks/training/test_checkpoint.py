from pathlib import Path
from typing import List

import numpy as np
import pytest
from prefect.logging.loggers import disable_run_logger

from src.constants.parts import Affordance
from src.models.config import AblationConfig, TrainConfig
from src.models.samples import SamplePair
from src.tasks.data.synthetic import generate_synthetic_pair
from src.tasks.training.checkpoint import build_model, restore_training_state, save_training_state
from src.tasks.training.step import train_step
from src.utils.errors import CheckpointError
from src.utils.io.checkpoints import load_checkpoint, save_checkpoint


@pytest.fixture
def pairs() -> List[SamplePair]:
    with disable_run_logger():
        return [generate_synthetic_pair.fn(i, Affordance.SIT, 64, f"pair_{i}") for i in range(2)]


def test_restore_uses_stored_config(tmp_path: Path, small_train_config: TrainConfig) -> None:
    model, optimizer = build_model(small_train_config)
    save_training_state(tmp_path, model, optimizer, small_train_config, step=5)

    restored, _, config, checkpoint = restore_training_state(tmp_path)
    assert checkpoint.step == 5
    assert config.dump() == small_train_config.dump()
    for name, value in model.state_dict().items():
        np.testing.assert_allclose(restored.state_dict()[name], value, rtol=1e-6, atol=1e-7)


def test_resumed_step_is_reproducible(
    tmp_path: Path, small_train_config: TrainConfig, pairs: List[SamplePair]
) -> None:
    model, optimizer = build_model(small_train_config)
    with disable_run_logger():
        train_step.fn(model, optimizer, pairs, small_train_config)
    save_training_state(tmp_path, model, optimizer, small_train_config, step=1)

    losses = []
    for _ in range(2):
        resumed, resumed_opt, config, _ = restore_training_state(tmp_path)
        with disable_run_logger():
            losses.append(train_step.fn(resumed, resumed_opt, pairs, config).losses)
    assert losses[0] == losses[1]


def test_optimizer_state_survives(tmp_path: Path, small_train_config: TrainConfig, pairs: List[SamplePair]) -> None:
    model, optimizer = build_model(small_train_config)
    with disable_run_logger():
        train_step.fn(model, optimizer, pairs, small_train_config)
    save_training_state(tmp_path, model, optimizer, small_train_config, step=1)

    _, restored_opt, _, _ = restore_training_state(tmp_path)
    assert restored_opt.state_dict()["step"] == optimizer.state_dict()["step"] == 1


def test_incompatible_config_rejected(tmp_path: Path, small_train_config: TrainConfig) -> None:
    model, optimizer = build_model(small_train_config)
    save_training_state(tmp_path, model, optimizer, small_train_config, step=0)
    wider = small_train_config.model_copy(
        update={"model": small_train_config.model.model_copy(update={"channels": 24})}
    )
    with pytest.raises(CheckpointError):
        restore_training_state(tmp_path, wider)


def test_checkpoint_without_config_rejected(tmp_path: Path, small_train_config: TrainConfig) -> None:
    model, _ = build_model(small_train_config)
    save_checkpoint(tmp_path, model.state_dict(), {"step": 0})
    with pytest.raises(CheckpointError, match="configuration"):
        restore_training_state(tmp_path)


def test_ablation_flags_stored(tmp_path: Path, small_train_config: TrainConfig) -> None:
    config = small_train_config.model_copy(update={"ablations": AblationConfig(pose=True)})
    model, optimizer = build_model(config)
    save_training_state(tmp_path, model, optimizer, config, step=0)
    assert load_checkpoint(tmp_path).metadata["config"]["ablations"]["pose"] is True
