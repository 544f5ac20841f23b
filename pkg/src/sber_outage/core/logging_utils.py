"""
Logging utilities for sber-outage.
"""

import logging
import sys

from sber_outage.core.config import LOGS_DIR, ensure_dirs


def setup_logging(log_level=logging.WARNING, log_to_file: bool = True):
    """
    Set up logging configuration.

    The console handler writes to stderr; stdout carries command results only.
    """
    # Create formatter
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Avoid stacking handlers when the CLI is invoked repeatedly in one process
    for handler in list(root_logger.handlers):
        if getattr(handler, "_sber_handler", False):
            root_logger.removeHandler(handler)
            handler.close()

    if log_to_file:
        ensure_dirs()
        file_handler = logging.FileHandler(LOGS_DIR / "sber_outage.log", encoding="utf-8")
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        file_handler._sber_handler = True
        root_logger.addHandler(file_handler)

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    console_handler._sber_handler = True
    root_logger.addHandler(console_handler)

    return root_logger


def get_logger(name):
    """
    Get a logger instance for a module.
    """
    return logging.getLogger(name)
