"""
Logging helpers for spacetime-pspline.

Every module logs under the ``spacetime_pspline`` namespace. Applications and
the command line call :func:`configure_logging` once; long benchmark runs can
thin out their per-replicate progress records with :func:`add_progress_filter`.
"""

import logging
import os
import sys
import time
from typing import Callable, Dict, List, Optional, Union

PACKAGE_LOGGER = "spacetime_pspline"
DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_LEVELS: Dict[str, int] = {
    "CRITICAL": logging.CRITICAL,
    "ERROR": logging.ERROR,
    "WARNING": logging.WARNING,
    "INFO": logging.INFO,
    "DEBUG": logging.DEBUG,
    "NOTSET": logging.NOTSET,
}


def _resolve_level(level: Union[int, str]) -> int:
    if isinstance(level, str):
        return _LEVELS.get(level.upper(), logging.INFO)
    return level


def _build_handlers(log_to_console: bool, log_file: Optional[str]) -> List[logging.Handler]:
    handlers: List[logging.Handler] = []
    if log_to_console:
        # stdout carries CSV output of the command line
        handlers.append(logging.StreamHandler(sys.stderr))
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    return handlers


def configure_logging(
    level: Union[int, str] = logging.INFO,
    format_string: Optional[str] = None,
    log_file: Optional[str] = None,
    log_to_console: bool = True,
    log_to_file: bool = False,
) -> None:
    """
    Install handlers on the root logger and set the package level.

    Existing root handlers are removed first, so repeated calls (one per CLI
    invocation in a test run, say) never duplicate output.

    Args:
        level: Level as a number or a case-insensitive name such as ``"debug"``
        format_string: Record format, :data:`DEFAULT_FORMAT` when omitted
        log_file: File to append records to; its directory is created
        log_to_console: Write records to standard error
        log_to_file: Enable ``log_file``

    Examples:
        >>> from spacetime_pspline.logging_config import configure_logging
        >>> configure_logging(level="DEBUG")
        >>> configure_logging(log_to_file=True, log_file="runs/bench.log")
    """
    level = _resolve_level(level)
    formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    for handler in _build_handlers(log_to_console, log_file if log_to_file else None):
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)

    logging.getLogger(PACKAGE_LOGGER).setLevel(level)


def get_logger(name: str) -> logging.Logger:
    """
    Logger under the package namespace.

    ``get_logger("bench")`` and ``get_logger("spacetime_pspline.bench")`` return
    the same logger.
    """
    if name == PACKAGE_LOGGER or name.startswith(PACKAGE_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{PACKAGE_LOGGER}.{name}")


def set_log_level(level: Union[int, str]) -> None:
    """Change the level of the package logger without touching handlers."""
    logging.getLogger(PACKAGE_LOGGER).setLevel(_resolve_level(level))


def get_log_levels() -> Dict[str, int]:
    """Level names accepted by ``--log-level`` mapped to their numeric values."""
    return dict(_LEVELS)


class ProgressLogFilter(logging.Filter):
    """
    A logging filter that rate-limits progress messages.

    Records flagged with ``extra={"progress": True}`` pass at most once per
    ``interval`` seconds per logger name. All other records pass unchanged.
    """

    def __init__(self, interval: float = 5.0, clock: Callable[[], float] = time.monotonic) -> None:
        """
        Initialize the filter.

        Args:
            interval: Minimum number of seconds between two progress records
            clock: Zero-argument callable returning the current time in seconds
        """
        super().__init__()
        self.interval = interval
        self._clock = clock
        self._last_emitted: Dict[str, float] = {}

    def filter(self, record: logging.LogRecord) -> bool:
        if not getattr(record, "progress", False):
            return True
        now = self._clock()
        last = self._last_emitted.get(record.name)
        if last is not None and now - last < self.interval:
            return False
        self._last_emitted[record.name] = now
        return True


def add_progress_filter(interval: float = 5.0) -> None:
    """
    Attach one :class:`ProgressLogFilter` to every installed handler.

    Call it after :func:`configure_logging`; handlers added later are not
    filtered.
    """
    progress_filter = ProgressLogFilter(interval)
    for handler in logging.getLogger(PACKAGE_LOGGER).handlers + logging.getLogger().handlers:
        handler.addFilter(progress_filter)
