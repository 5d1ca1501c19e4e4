"""
Console logging for klt.

Every record carries its level tag and the seconds elapsed since the package was imported, so
long enumerations and scans can be timed from the log alone. Colours are dropped when stderr
is not a terminal or NO_COLOR is set. While a progress bar runs, records go through tqdm.
"""

import logging
import os
import sys
import time
from typing import Any

from tqdm import tqdm

"""Reference point of the elapsed-time stamp."""
START = time.monotonic()


def use_color() -> bool:
    return "NO_COLOR" not in os.environ and sys.stderr.isatty()


class Logger(logging.Logger):
    """
    Logger with level tags and elapsed-time stamps, shared by every klt module.
    """

    """The ANSI colour used for each level tag."""
    COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[41m",
        "RESET": "\033[0m",
    }

    def __init__(self, name: str, level: int = logging.INFO) -> None:
        super().__init__(name, level)

        if not self.hasHandlers():
            console_handler = logging.StreamHandler()
            console_handler.setFormatter(logging.Formatter("%(message)s"))
            self.addHandler(console_handler)

            self.propagate = False

    def format_message(self, level: str, message: str) -> str:
        """
        Function that prefixes a message with its level tag and the elapsed time.

        :param level: the log level name.
        :param message: the log message.
        :return: the tagged message, e.g. `[INFO +12.3s] message`.
        """

        tag = level
        if use_color():
            tag = f"{self.COLORS.get(level, '')}{level}{self.COLORS['RESET']}"
        return f"[{tag} +{time.monotonic() - START:.1f}s] {message}"

    def debug(self, msg: str, *args: object, **kwargs: Any) -> None:  # type: ignore
        super().debug(self.format_message("DEBUG", msg), *args, **kwargs)

    def info(self, msg: str, *args: object, **kwargs: Any) -> None:  # type: ignore
        super().info(self.format_message("INFO", msg), *args, **kwargs)

    def warning(self, msg: str, *args: object, **kwargs: Any) -> None:  # type: ignore
        super().warning(self.format_message("WARNING", msg), *args, **kwargs)

    def error(self, msg: str, *args: object, **kwargs: Any) -> None:  # type: ignore
        super().error(self.format_message("ERROR", msg), *args, **kwargs)

    def critical(  # type: ignore
        self, msg: str, *args: object, exit_code: int = 1, **kwargs: Any
    ) -> None:
        """
        Function that logs a critical message and terminates the run.

        :param msg: the critical message.
        :param exit_code: the process exit status.
        :raises SystemExit: always.
        """

        super().critical(self.format_message("CRITICAL", msg), *args, **kwargs)
        raise SystemExit(exit_code)


def get() -> logging.Logger:
    """
    Function that gets the package logger, an instance of the custom Logger class.

    :return: the logger instance.
    """

    logging.setLoggerClass(Logger)
    return logging.getLogger("klt")


class TqdmLoggingHandler(logging.Handler):
    """
    Handler that writes records through tqdm so that progress bars are not torn.
    """

    def __init__(self, level: Any = logging.NOTSET) -> None:
        super().__init__(level)

    def emit(self, record: logging.LogRecord) -> None:
        try:
            tqdm.write(self.format(record))
            self.flush()
        except Exception:
            self.handleError(record)


def route_through_tqdm(log: logging.Logger) -> list[logging.Handler]:
    """
    Function that swaps the handlers of a logger for a TqdmLoggingHandler.

    :param log: the logger to reroute.
    :return: the handlers that were removed, so they can be restored.
    """

    previous = log.handlers[:]
    for h in previous:
        log.removeHandler(h)
    log.addHandler(TqdmLoggingHandler())
    return previous


def restore_handlers(log: logging.Logger, handlers: list[logging.Handler]) -> None:
    """
    Function that restores handlers removed by route_through_tqdm.

    :param log: the logger.
    :param handlers: the handlers to reinstall.
    """

    for h in log.handlers[:]:
        log.removeHandler(h)
    for h in handlers:
        log.addHandler(h)
