"""
CSV, JSON and timestamp helpers.
"""
import json

import numpy as np
import pandas as pd
import pytest

from src.utils.file_utils import (
    envelope_grid,
    grid_envelope,
    load_csv,
    load_distribution_csv,
    load_grid_csv,
    load_json,
    load_matrix_csv,
    load_symbol_csv,
    parse_timestamp,
    save_distribution_csv,
    save_json,
    save_matrix_csv,
    save_symbol_csv,
    save_to_csv,
    utc_timestamp,
)


def test_symbol_csv_is_exact(tmp_path, rng):
    grid = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    path = save_symbol_csv(grid, tmp_path / "symbol.csv")
    assert np.array_equal(load_symbol_csv(path), grid)
    assert np.array_equal(load_grid_csv(path), grid)
    assert list(pd.read_csv(path).columns) == ["p", "q", "re", "im"]


def test_distribution_csv_is_exact(tmp_path, rng):
    grid = rng.normal(size=(5, 5)) / 3
    path = save_distribution_csv(grid, tmp_path / "nested" / "wigner.csv")
    assert np.array_equal(load_distribution_csv(path), grid)
    loaded = load_grid_csv(path)
    assert loaded.dtype == float and np.array_equal(loaded, grid)


def test_matrix_csv_is_exact(tmp_path, rng):
    matrix = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    path = save_matrix_csv(matrix, tmp_path / "matrix.csv")
    assert np.array_equal(load_matrix_csv(path), matrix)


def test_incomplete_grid_is_rejected(tmp_path):
    path = tmp_path / "short.csv"
    pd.DataFrame({"p": [0, 1], "q": [0, 1], "value": [1.0, 2.0]}).to_csv(path, index=False)
    with pytest.raises(ValueError, match="expected 4 rows"):
        load_distribution_csv(path)


def test_save_empty_frame_raises(tmp_path):
    with pytest.raises(ValueError, match="empty"):
        save_to_csv(pd.DataFrame(), tmp_path / "empty.csv")


def test_missing_file_and_columns(tmp_path):
    missing = tmp_path / "nowhere.csv"
    with pytest.raises(FileNotFoundError, match="nowhere.csv"):
        load_csv(missing)
    with pytest.raises(FileNotFoundError):
        load_json(tmp_path / "nowhere.json")

    path = tmp_path / "partial.csv"
    pd.DataFrame({"p": [0], "q": [0]}).to_csv(path, index=False)
    with pytest.raises(ValueError, match="missing columns"):
        load_grid_csv(path)


def test_timestamps_are_utc():
    stamp = utc_timestamp()
    parsed = parse_timestamp(stamp)
    assert parsed.utcoffset().total_seconds() == 0
    assert stamp.endswith("+00:00")


def test_envelope_round_trip(tmp_path, rng):
    grid = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    envelope = grid_envelope(grid, "wigner", 1.0, timestamp="2024-01-01T00:00:00+00:00", engine="oracle")
    assert envelope["N"] == 5 and envelope["engine"] == "oracle"
    path = save_json(envelope, tmp_path / "grid.json")
    loaded = load_json(path)
    assert loaded == json.loads(json.dumps(envelope))
    assert np.array_equal(envelope_grid(loaded), grid)


def test_envelope_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        envelope_grid({"N": 3, "grid": [[0.0, 1.0], [1.0, 0.0]]})
