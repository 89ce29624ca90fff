"""
Toolkit-wide settings.
"""
import math
from pathlib import Path

import pytest

from src.utils.config import config


def test_file_patterns(tmp_path):
    assert config.get_file_path("snapshot", tmp_path, index=7) == tmp_path / "snapshot_00007.csv"
    assert config.get_file_path("symbol", tmp_path, label="h").name == "symbol_h.csv"
    assert config.get_file_path("manifest").parent == config.OUTPUT_DIR
    log = config.get_file_path("logs", date="2024-06-11")
    assert log == config.LOGS_DIR / "phasespace_2024-06-11.log"


def test_ensure_directories_creates_extras(tmp_path):
    target = tmp_path / "a" / "b"
    config.ensure_directories(target)
    assert Path(target).is_dir()


def test_max_workers_resolution(monkeypatch):
    monkeypatch.delenv(config.ENV_MAX_WORKERS, raising=False)
    assert config.max_workers() == 1
    assert config.max_workers(4) == 4
    assert config.max_workers(0) == 1
    monkeypatch.setenv(config.ENV_MAX_WORKERS, "3")
    assert config.max_workers(8) == 3
    monkeypatch.setenv(config.ENV_MAX_WORKERS, "many")
    with pytest.raises(ValueError, match="integer"):
        config.max_workers()
    monkeypatch.setenv(config.ENV_MAX_WORKERS, "0")
    with pytest.raises(ValueError, match="positive"):
        config.max_workers()


def test_default_frame_width():
    assert config.default_frame_sigma(31) == pytest.approx(math.sqrt(31 / (4 * math.pi)))
