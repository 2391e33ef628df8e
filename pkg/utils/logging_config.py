import logging
import sys
from pathlib import Path
from typing import Optional, TextIO

from models import ConfigError

LOG_FILE = "bohm-trajectories.log"
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)-24s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

PROJECT_LOGGERS = ("main", "services", "utils", "models", "init_scripts")
# Plot backends log font and image lookups at DEBUG
NOISY_LOGGERS = ("matplotlib", "PIL")


class ColoredFormatter(logging.Formatter):
    """Level names in ANSI colours; used only when the stream is a terminal."""

    LEVEL_COLORS = {
        logging.DEBUG: "\033[36m",
        logging.INFO: "\033[32m",
        logging.WARNING: "\033[33m",
        logging.ERROR: "\033[31m",
        logging.CRITICAL: "\033[35m",
    }
    RESET = "\033[0m"
    BOLD = "\033[1m"

    def format(self, record):
        color = self.LEVEL_COLORS.get(record.levelno)
        if color is None:
            return super().format(record)
        # A copy, so the file handler still sees the plain level name
        record = logging.makeLogRecord(record.__dict__)
        record.levelname = f"{color}{self.BOLD}{record.levelname:8}{self.RESET}"
        return super().format(record)


def _console_handler(stream: TextIO) -> logging.Handler:
    handler = logging.StreamHandler(stream)
    if getattr(stream, "isatty", lambda: False)():
        handler.setFormatter(ColoredFormatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT.replace("%(levelname)s",
                                                                  "%(levelname)-8s"),
                                               datefmt=DATE_FORMAT))
    return handler


def setup_logging(log_level: str = "INFO", log_dir: Optional[str] = "logs"):
    """Configure the root logger for a CLI run.

    Args:
        log_level: DEBUG, INFO, WARNING or ERROR (case-insensitive).
        log_dir: Directory for the run log file. Empty or None disables it.

    Console output goes to stderr; stdout belongs to the validate table.
    Calling it again only updates the levels.
    """
    level = logging.getLevelName(log_level.upper())
    if not isinstance(level, int):
        raise ConfigError(f"unknown log level '{log_level}'", key="log_level")

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for name in PROJECT_LOGGERS:
        logging.getLogger(name).setLevel(level)

    if root_logger.handlers:
        for handler in root_logger.handlers:
            handler.setLevel(level)
        return

    handlers = [_console_handler(sys.stderr)]
    if log_dir:
        path = Path(log_dir)
        path.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(path / LOG_FILE, encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(
            LOG_FORMAT.replace("%(levelname)s", "%(levelname)-8s"), datefmt=DATE_FORMAT))
        handlers.append(file_handler)
    for handler in handlers:
        handler.setLevel(level)
        root_logger.addHandler(handler)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
