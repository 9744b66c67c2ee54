"""
Logging configuration for the engine.
Provides structured logging with file rotation and different log levels.
"""
import logging
import sys
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

import orjson

ROOT_LOGGER_NAME = "romi"


class JSONFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging"""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        if hasattr(record, "extra_data"):
            log_data["extra"] = record.extra_data

        return orjson.dumps(log_data, default=str).decode()


class ColoredFormatter(logging.Formatter):
    """Colored formatter for console output"""

    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
        'RESET': '\033[0m'
    }

    def format(self, record: logging.LogRecord) -> str:
        log_color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        reset = self.COLORS['RESET']
        message = super().format(record)
        colored_level = f"{log_color}{record.levelname}{reset}"
        return message.replace(record.levelname, colored_level, 1)


_TEXT_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)s:%(funcName)s:%(lineno)d | %(message)s'
_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    log_level: str = "INFO",
    log_dir: str = "logs",
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    enable_json_logs: bool = True,
    enable_file_logs: bool = True,
    enable_console: bool = True,
) -> logging.Logger:
    """
    Setup and configure the engine logger.

    Args:
        name: Logger name
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: Directory to store log files
        max_bytes: Maximum size of each log file before rotation
        backup_count: Number of backup files to keep
        enable_json_logs: Enable JSON formatted file logging
        enable_file_logs: Enable plain-text and error file logging
        enable_console: Enable console logging (stderr, so reports on stdout stay clean)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, log_level.upper()))
    logger.propagate = False

    # Remove existing handlers to avoid duplicates
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    if enable_console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, log_level.upper()))
        console_handler.setFormatter(ColoredFormatter(fmt=_TEXT_FORMAT, datefmt=_DATE_FORMAT))
        logger.addHandler(console_handler)

    if not (enable_json_logs or enable_file_logs):
        return logger

    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    if enable_json_logs:
        json_handler = RotatingFileHandler(
            log_path / f"{name}_json.log",
            maxBytes=max_bytes,
            backupCount=backup_count
        )
        json_handler.setLevel(logging.DEBUG)
        json_handler.setFormatter(JSONFormatter())
        logger.addHandler(json_handler)

    if enable_file_logs:
        text_formatter = logging.Formatter(fmt=_TEXT_FORMAT, datefmt=_DATE_FORMAT)

        text_handler = RotatingFileHandler(
            log_path / f"{name}.log",
            maxBytes=max_bytes,
            backupCount=backup_count
        )
        text_handler.setLevel(logging.DEBUG)
        text_handler.setFormatter(text_formatter)
        logger.addHandler(text_handler)

        error_handler = RotatingFileHandler(
            log_path / f"{name}_errors.log",
            maxBytes=max_bytes,
            backupCount=backup_count
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(text_formatter)
        logger.addHandler(error_handler)

    logger.debug(f"Logger '{name}' initialized with level {log_level}")
    return logger


def configure_logging(settings, *, verbose: bool = False) -> logging.Logger:
    """Configure the root engine logger from settings. Called once by the CLI."""
    return setup_logger(
        name=ROOT_LOGGER_NAME,
        log_level="DEBUG" if verbose else settings.ROMI_LOG_LEVEL,
        log_dir=settings.ROMI_LOG_DIR,
        enable_json_logs=settings.ROMI_JSON_LOGS,
        enable_file_logs=settings.ROMI_FILE_LOGS,
    )


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger instance.

    Args:
        name: Logger name (returns the engine root logger if None)

    Returns:
        Logger instance
    """
    if name:
        return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")
    return logging.getLogger(ROOT_LOGGER_NAME)


def log_simulation_progress(
    logger: logging.Logger,
    design: str,
    scenario: str,
    completed: int,
    total: int,
    duration: float,
):
    """Log replication progress for one (design, scenario) cell"""
    logger.info(
        f"{design} / {scenario}: {completed}/{total} replications ({duration:.1f}s)",
        extra={"extra_data": {
            "design": design,
            "scenario": scenario,
            "completed": completed,
            "total": total,
            "duration": duration,
        }}
    )


def log_error_with_context(logger: logging.Logger, error: Exception, context: Dict[str, Any] = None):
    """Log an error with additional context"""
    logger.error(
        f"Error occurred: {str(error)}",
        exc_info=True,
        extra={"extra_data": context or {}}
    )
