from typing import Any, Dict

PAIR_COUNT = 8
IMAGE_SIZE = 64


def small_config(**overrides: Any) -> Dict[str, Any]:
    """Plain training config for a 64×64 network with 16 fused channels."""
    config: Dict[str, Any] = {
        "seed": 0,
        "steps": 2,
        "batch": 2,
        "log_every": 1,
        "model": {
            "image_size": IMAGE_SIZE,
            "channels": 16,
            "stage_channels": [8, 16, 24, 32],
            "mlp_ratio": 2,
            "pose_layers": 1,
        },
        "solver": {"max_iter": 60},
    }
    config.update(overrides)
    return config
