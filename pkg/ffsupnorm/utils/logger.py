#!/usr/bin/env python3
"""
Logging configuration for ffsupnorm.

Console output goes to stderr; stdout is reserved for JSON reports.
Long sweeps can additionally mirror the log into the output directory.
"""

import logging
import os
import sys
from pathlib import Path

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(name: str = __name__, level: int | str = logging.INFO) -> logging.Logger:
    """Setup and configure logger"""

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger


def add_run_log(path: Path, name: str = 'ffsupnorm') -> logging.FileHandler:
    """Mirror `name` into a file; the caller removes the handler when the run ends."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding='utf-8')
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logging.getLogger(name).addHandler(handler)
    return handler


def remove_run_log(handler: logging.Handler, name: str = 'ffsupnorm') -> None:
    logging.getLogger(name).removeHandler(handler)
    handler.close()


# Global logger instance
logger = setup_logger('ffsupnorm', os.getenv('FFSN_LOG_LEVEL', 'INFO').upper())
