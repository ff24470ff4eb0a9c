"""
Console logging for the curvforge command line tools.

Logs go to stderr so stdout stays free for command results (manifest paths, distances).
"""

import logging
import os
import sys

LOG_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)s | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

ENV_LOG_LEVEL = "CURVFORGE_LOG_LEVEL"

#colour codes for console output
class LogColours:
    RESET = "\033[0m"
    RED = "\033[91m"
    YELLOW = "\033[93m"
    BLUE = "\033[94m"
    GRAY = "\033[90m"


class ColouredFormatter(logging.Formatter):
    """Formatter that colours the level name."""

    COLOURS = {
        logging.DEBUG: LogColours.GRAY,
        logging.INFO: LogColours.BLUE,
        logging.WARNING: LogColours.YELLOW,
        logging.ERROR: LogColours.RED,
        logging.CRITICAL: LogColours.RED,
    }

    def format(self, record: logging.LogRecord) -> str:
        levelname = record.levelname
        if record.levelno in self.COLOURS:
            record.levelname = f"{self.COLOURS[record.levelno]}{levelname}{LogColours.RESET}"

        result = super().format(record)

        #reset levelname for other handlers
        record.levelname = levelname

        return result


def resolve_level(level: str | None = None) -> int:
    """Turn a level name (or the CURVFORGE_LOG_LEVEL env var) into a logging constant."""
    name = level or os.environ.get(ENV_LOG_LEVEL) or "INFO"
    return getattr(logging, name.upper(), logging.INFO)


def setup_logging(level: str | None = None, use_colours: bool | None = None) -> None:
    """
    Configure the root logger with a single stderr handler.

    Args:
        level: Log level name; falls back to CURVFORGE_LOG_LEVEL, then INFO
        use_colours: Colour level names; defaults to True only when stderr is a TTY

    Example:
        >>> setup_logging("DEBUG")
        >>> setup_logging(use_colours=False)
    """
    log_level = resolve_level(level)

    if use_colours is None:
        use_colours = sys.stderr.isatty()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)

    if use_colours:
        formatter: logging.Formatter = ColouredFormatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)
    else:
        formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    #remove existing handlers to avoid duplicates on repeated cli calls
    root_logger.handlers.clear()
    root_logger.addHandler(console_handler)

    #reduce noise from imaging libraries
    logging.getLogger("PIL").setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger for a specific module.

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.info("Growing 60 curves")
    """
    return logging.getLogger(name)
