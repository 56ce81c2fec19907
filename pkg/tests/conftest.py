import sys
from pathlib import Path
from typing import Generator

import pytest
from _pytest.config import Config
from dotenv import load_dotenv
from prefect.testing.utilities import prefect_test_harness

from src.models.config import FusionConfig, ModelConfig, SolverConfig, TrainConfig

# Add src directory to Python path
src_dir = Path(__file__).resolve().parent.parent / "src"
sys.path.append(str(src_dir))


@pytest.fixture(autouse=True, scope="session")
def prefect_test_fixture() -> Generator[None, None, None]:
    with prefect_test_harness():
        yield


def pytest_configure(config: Config) -> None:
    """Configure custom markers"""
    config.addinivalue_line("markers", "slow: learning and end-to-end runs (deselect with -m 'not slow')")


@pytest.fixture(scope="session", autouse=True)
def load_env() -> None:
    """Load environment variables for tests"""
    load_dotenv()


@pytest.fixture
def small_model() -> ModelConfig:
    """Desk-test network: 64×64 input, 16 fused channels."""
    return ModelConfig(image_size=64, channels=16, stage_channels=(8, 16, 24, 32), mlp_ratio=2, pose_layers=1)


@pytest.fixture
def solver_config() -> SolverConfig:
    return SolverConfig(max_iter=60)


@pytest.fixture
def small_train_config(small_model: ModelConfig, solver_config: SolverConfig) -> TrainConfig:
    return TrainConfig(
        seed=0,
        steps=2,
        batch=2,
        model=small_model,
        solver=solver_config,
        fusion=FusionConfig(),
        log_every=1,
    )
