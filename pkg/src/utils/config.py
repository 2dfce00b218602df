"""Environment configuration for mdao-forge."""

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from utils.constants import CONSTANTS_ENV_VAR, DEFAULT_CONSTANTS_FILE, LOG_LEVEL_ENV_VAR

# Load environment variables
load_dotenv()

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
LOG_DATEFMT = '%H:%M:%S'


def resolve_constants_path(cli_value: Optional[str] = None) -> Path:
    """Pick the constants file: explicit flag, then environment, then the shipped default."""
    if cli_value:
        return Path(cli_value)
    env_value = os.getenv(CONSTANTS_ENV_VAR)
    if env_value:
        return Path(env_value)
    return DEFAULT_CONSTANTS_FILE


def configure_logging(debug: bool = False) -> None:
    """Configure the root logger once for CLI use."""
    level_name = "DEBUG" if debug else os.getenv(LOG_LEVEL_ENV_VAR, "INFO").upper()
    logging.basicConfig(
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
        level=getattr(logging, level_name, logging.INFO),
    )
