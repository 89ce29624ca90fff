"""Logger setup shared by the toolkit modules and the command-line pipeline."""
from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional, Union

from .config import config

ENV_LOG_LEVEL = "PHASESPACE_LOG_LEVEL"

_CONFIGURED = False


def _level() -> int:
    name = os.environ.get(ENV_LOG_LEVEL) or config.LOGGING_SETTINGS.get("level", "INFO")
    level = logging.getLevelName(str(name).upper())
    if not isinstance(level, int):
        raise ValueError(f"{ENV_LOG_LEVEL} must name a logging level, got {name!r}")
    return level


def configure_root_logging(force: bool = False, log_file: Optional[Union[str, Path]] = None) -> None:
    """Configure root logging once.

    Args:
        force: Reconfigure even if already configured.
        log_file: Also write to this file. Without it the dated file under
            LOGS_DIR is used when LOGGING_SETTINGS["to_file"] is set.
    """
    global _CONFIGURED
    if _CONFIGURED and not force:
        return
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file is None and config.LOGGING_SETTINGS.get("to_file", False):
        config.ensure_directories()
        log_file = config.get_file_path("logs")
    if log_file is not None:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=_level(),
        format=config.LOGGING_SETTINGS.get("format", "%(asctime)s - %(levelname)s - %(message)s"),
        handlers=handlers,
        force=force,
    )
    _CONFIGURED = True


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Return a module logger, configuring the root logger on first use."""
    configure_root_logging()
    return logging.getLogger(name or __name__)


def log_banner(logger: logging.Logger, title: str, width: int = 60) -> None:
    logger.info("=" * width)
    logger.info(title)
    logger.info("=" * width)


__all__ = ["ENV_LOG_LEVEL", "configure_root_logging", "get_logger", "log_banner"]
