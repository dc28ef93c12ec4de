"""Logging infrastructure for fishstream
"""

import logging
import sys
from pathlib import Path
from typing import Optional

from .config import DEFAULTS, Config


CONTEXT_ATTR = "fishstream_context"


class ContextFormatter(logging.Formatter):
    """Appends keyword context from Logger calls as sorted key=value pairs"""

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        context = getattr(record, CONTEXT_ATTR, None)
        if context:
            line += " | " + " ".join(f"{key}={context[key]}" for key in sorted(context))
        return line


class Logger:
    """Centralized logger for fishstream"""

    _instance: Optional["Logger"] = None

    def __new__(cls, config: Config | None = None):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self, config: Config | None = None):
        if self._initialized:
            if config is not None and config is not self.config:
                self.configure(config)
            return

        self.config = config
        self.logger = logging.getLogger("fishstream")
        self._setup_logging()
        self._initialized = True

    def configure(self, config: Config):
        """Re-read level and handlers from a new configuration"""
        self.config = config
        self._setup_logging()

    def _setup_logging(self):
        """Setup logging configuration"""
        level = logging.INFO
        log_dir = Path(DEFAULTS["app"]["log_dir"])
        console = False
        if self.config:
            level_str = self.config.get("app.log_level", "INFO")
            level = getattr(logging, str(level_str).upper(), logging.INFO)
            log_dir = Path(self.config.get("app.log_dir", str(log_dir))).expanduser()
            console = bool(self.config.get("app.console_logging", False))

        self.logger.setLevel(level)
        self.logger.propagate = False

        formatter = ContextFormatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        )

        # stdout carries JSONL products, so the console handler writes to stderr
        handlers: list[logging.Handler] = []
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            handlers.append(logging.FileHandler(log_dir / "fishstream.log"))
        except OSError:
            console = True
        if console:
            handlers.append(logging.StreamHandler(sys.stderr))

        for handler in self.logger.handlers:
            handler.close()
        self.logger.handlers.clear()
        for handler in handlers:
            handler.setLevel(level)
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

    def _log(self, level: int, message: str, **kwargs):
        self.logger.log(level, message, extra={CONTEXT_ATTR: kwargs})

    def debug(self, message: str, **kwargs):
        """Log debug message"""
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs):
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs):
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, **kwargs):
        """Log error message; keyword context is appended as key=value pairs"""
        self._log(logging.ERROR, message, **kwargs)

    def critical(self, message: str, **kwargs):
        self._log(logging.CRITICAL, message, **kwargs)
