from pathlib import Path

import numpy as np
import pytest
from prefect.logging.loggers import disable_run_logger

from src.constants.parts import Affordance
from src.models.config import TrainConfig
from src.tasks.data.synthetic import generate_synthetic_pair
from src.tasks.inference.predict import overlay, predict_pair, write_predictions
from src.tasks.training.checkpoint import build_model
from src.utils.errors import DataError
from src.utils.io.images import read_image
from src.utils.io.tensors import read_tensor


def test_overlay_blends_red() -> None:
    image = np.zeros((3, 4, 4))
    heatmap = np.ones((4, 4))
    blended = overlay(image, heatmap)
    np.testing.assert_allclose(blended[0], 0.5)
    np.testing.assert_allclose(blended[1:], 0.0)


def test_overlay_resizes_heatmap() -> None:
    blended = overlay(np.ones((3, 32, 32)), np.zeros((8, 8)))
    assert blended.shape == (3, 32, 32)
    np.testing.assert_allclose(blended, 0.5)


def test_predict_and_write(tmp_path: Path, small_train_config: TrainConfig) -> None:
    model, _ = build_model(small_train_config)
    with disable_run_logger():
        pair = generate_synthetic_pair.fn(2, Affordance.WATCH, 64, "pair_2")
        d_in, d_non = predict_pair.fn(model, pair.image_in, pair.image_non, pair.pose)
        written = write_predictions.fn(tmp_path, pair.image_in, pair.image_non, d_in, d_non)

    assert d_in.shape == d_non.shape == (7, 64, 64)
    assert len([p for p in written if p.suffix == ".tnsr"]) == 14
    assert len([p for p in written if p.suffix == ".ppm"]) == 14
    assert read_image(tmp_path / "d_non_hand_overlay.ppm").shape == pair.image_non.shape
    assert read_tensor(tmp_path / "d_in_eye.tnsr").shape == (64, 64)


def test_predict_is_deterministic(small_train_config: TrainConfig) -> None:
    model, _ = build_model(small_train_config)
    with disable_run_logger():
        pair = generate_synthetic_pair.fn(3, Affordance.KICK, 64, "pair_3")
        first = predict_pair.fn(model, pair.image_in, pair.image_non, pair.pose)
        second = predict_pair.fn(model, pair.image_in, pair.image_non, pair.pose)
    np.testing.assert_array_equal(first[1], second[1])


def test_predict_rejects_bad_pose(small_train_config: TrainConfig) -> None:
    model, _ = build_model(small_train_config)
    image = np.zeros((3, 64, 64))
    with disable_run_logger(), pytest.raises(DataError, match="53"):
        predict_pair.fn(model, image, image, np.zeros((15, 3)))
