from pathlib import Path

import pytest

from src.flows.generation.subflows import dataset_generation_flow
from src.flows.training.subflows import training_flow
from tests.flows.helpers import IMAGE_SIZE, PAIR_COUNT, small_config


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    data_dir = tmp_path_factory.mktemp("dataset")
    dataset_generation_flow(data_dir, PAIR_COUNT, seed=0, size=IMAGE_SIZE)
    return data_dir


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory: pytest.TempPathFactory, dataset_dir: Path) -> Path:
    run_dir = tmp_path_factory.mktemp("run")
    training_flow(dataset_dir, run_dir, small_config())
    return run_dir
