import re

import pytest

from klt import logger
from klt.logger import Logger, TqdmLoggingHandler

log = logger.get()


def test_get() -> None:
    assert isinstance(log, Logger)
    assert log.name == "klt"
    assert logger.get() is log


def test_format_message(monkeypatch) -> None:
    monkeypatch.setenv("NO_COLOR", "1")
    message = log.format_message("INFO", "Xi=0.236")
    assert re.fullmatch(r"\[INFO \+\d+\.\ds\] Xi=0\.236", message), f"Wrong format: {message}"
    assert "\033[" not in message


def test_critical_exit_code() -> None:
    with pytest.raises(SystemExit) as e:
        log.critical("bad configuration", exit_code=2)
    assert e.value.code == 2


def test_route_through_tqdm() -> None:
    before = log.handlers[:]
    previous = logger.route_through_tqdm(log)
    assert previous == before
    assert [type(h) for h in log.handlers] == [TqdmLoggingHandler]

    logger.restore_handlers(log, previous)
    assert log.handlers == before
