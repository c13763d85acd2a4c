"""
Logging setup for nilflow.

Engines only ever call ``logging.getLogger(__name__)``; this module attaches
handlers to the ``nilflow`` logger once, from the CLI. Console output goes to
stdout and is off unless --verbose, so piped JSON/CSV stays parseable.
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Union

from nilflow.core.exceptions import ConfigError

LOG_FORMAT = '%(asctime)s - %(levelname)s - [%(name)s] - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def _numeric_level(level: Union[str, int]) -> int:
    if isinstance(level, int):
        return level
    name = str(level).strip().upper()
    if name not in LEVELS:
        raise ConfigError(f"Unknown log level '{level}' (expected one of {', '.join(LEVELS)})")
    return getattr(logging, name)


def _attach(logger: logging.Logger, handler: logging.Handler, level: int) -> None:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(handler)


def _reset(logger: logging.Logger) -> None:
    for handler in logger.handlers[:]:
        handler.close()
        logger.removeHandler(handler)


def setup_logging(
    name: str = 'nilflow',
    level: Union[str, int] = "INFO",
    log_file: Optional[Union[str, Path]] = None,
    console: bool = True,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 3
) -> logging.Logger:
    """
    Configure a named logger; calling it again replaces the old handlers.

    Args:
        name: Logger name, normally 'nilflow' so every engine logger inherits it
        level: Level name (case-insensitive) or logging constant
        log_file: Optional rotating log file; parent directories are created
        console: Also log to stdout
        max_bytes: Size at which the log file rotates
        backup_count: Rotated files kept

    Returns:
        The configured logger

    Raises:
        ConfigError: for an unknown level name
    """
    numeric = _numeric_level(level)
    logger = logging.getLogger(name)
    _reset(logger)
    logger.setLevel(numeric)

    if console:
        _attach(logger, logging.StreamHandler(sys.stdout), numeric)

    if log_file:
        path = Path(log_file)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            _attach(logger, RotatingFileHandler(path, maxBytes=max_bytes,
                                                backupCount=backup_count, encoding='utf-8'), numeric)
        except OSError as e:
            logger.warning(f"Log file {path} unavailable, continuing without it: {e}")

    if not logger.handlers:
        logger.addHandler(logging.NullHandler())
    logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
