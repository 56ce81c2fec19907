"""Application settings loaded from environment variables."""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class Settings:
    """Application settings."""

    VCRNET_DATA_DIR: Path = field(default_factory=lambda: Path(os.getenv("VCRNET_DATA_DIR", "data")))
    VCRNET_RUNS_DIR: Path = field(default_factory=lambda: Path(os.getenv("VCRNET_RUNS_DIR", "runs")))
    VCRNET_LOG_LEVEL: str = field(default_factory=lambda: os.getenv("VCRNET_LOG_LEVEL", "INFO").upper())
    VCRNET_SEED: int = field(default_factory=lambda: int(os.getenv("VCRNET_SEED", "0") or 0))

    def __post_init__(self) -> None:
        if self.VCRNET_LOG_LEVEL not in LOG_LEVELS:
            logger.warning(f"VCRNET_LOG_LEVEL={self.VCRNET_LOG_LEVEL} not recognised, using INFO")
            self.VCRNET_LOG_LEVEL = "INFO"
        if not self.VCRNET_DATA_DIR.exists():
            logger.debug(f"Data directory {self.VCRNET_DATA_DIR} does not exist yet")


settings = Settings()
