"""Package logger: one stream handler per named logger, shared by the library and the CLI."""

import logging
import sys
from typing import Optional, TextIO

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def parse_level(level: str) -> int:
    """Numeric logging level for a case-insensitive level name.

    Raises:
        ValueError: If the name is not one of ``LEVELS``.
    """
    name = str(level).upper()
    if name not in LEVELS:
        raise ValueError(f"Invalid log level: {level}. Must be one of: {', '.join(LEVELS)}")
    return getattr(logging, name)


def setup_logger(
    name: str = "iwasawa_cm", level: str = "INFO", stream: Optional[TextIO] = None
) -> logging.Logger:
    """Set up and configure logger.

    Args:
        name: Logger name, defaults to 'iwasawa_cm'
        level: Logging level, defaults to 'INFO'. Must be one of:
               DEBUG, INFO, WARNING, ERROR, CRITICAL
        stream: Target of the handler. A new logger writes to stdout unless a
            stream is given; an existing handler is moved to ``stream`` if passed.

    Returns:
        Configured logger instance

    Raises:
        ValueError: If the specified log level is invalid
    """
    logger = logging.getLogger(name)
    logger.setLevel(parse_level(level))

    handlers = [h for h in logger.handlers if isinstance(h, logging.StreamHandler)]
    if not handlers:
        handler = logging.StreamHandler(stream or sys.stdout)
        handler.setLevel(logging.DEBUG)  # the logger level does the filtering
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(handler)
    elif stream is not None:
        for handler in handlers:
            if handler.stream is not stream:
                handler.setStream(stream)

    return logger
