"""
Root logger setup.
"""
import logging

import pytest

from src.utils.logging_utils import ENV_LOG_LEVEL, configure_root_logging, get_logger, log_banner


@pytest.fixture
def restore_logging():
    yield
    configure_root_logging(force=True)


def test_log_file_receives_banner(tmp_path, restore_logging):
    path = tmp_path / "logs" / "run.log"
    configure_root_logging(force=True, log_file=path)
    log_banner(get_logger("phasespace.test"), "EVOLVE STARTED", width=10)
    for handler in logging.getLogger().handlers:
        handler.flush()
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].endswith("=" * 10) and lines[1].endswith("EVOLVE STARTED")


def test_level_from_environment(restore_logging, monkeypatch):
    monkeypatch.setenv(ENV_LOG_LEVEL, "debug")
    configure_root_logging(force=True)
    assert logging.getLogger().level == logging.DEBUG
    monkeypatch.setenv(ENV_LOG_LEVEL, "chatty")
    with pytest.raises(ValueError, match=ENV_LOG_LEVEL):
        configure_root_logging(force=True)
