"""
File utilities for grid and matrix I/O.

Every CSV goes through pandas with 17 significant digits so that a written
file reads back to the identical float64 values.
"""

import json
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd
import pytz
from dateutil import parser as date_parser

from .config import config
from .logging_utils import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

SYMBOL_COLUMNS = ["p", "q", "re", "im"]
DISTRIBUTION_COLUMNS = ["p", "q", "value"]
MATRIX_COLUMNS = ["row", "col", "re", "im"]


def save_to_csv(dataframe: pd.DataFrame, filepath: PathLike) -> str:
    """
    Save DataFrame to CSV file.

    Args:
        dataframe: DataFrame to save
        filepath: Target file; parent directories are created

    Returns:
        Path to saved file
    """
    if dataframe is None or dataframe.empty:
        raise ValueError("Cannot save empty or None DataFrame")

    filepath = str(filepath)
    ensure_directory(os.path.dirname(filepath) or ".")
    dataframe.to_csv(filepath, index=False, float_format=config.CSV_FLOAT_FORMAT)
    logger.debug("Data saved to %s", filepath)
    return filepath


def load_csv(filepath: PathLike, columns: Optional[list] = None) -> pd.DataFrame:
    """
    Load CSV file into DataFrame.

    Args:
        filepath: Path to CSV file
        columns: Columns the file must carry

    Returns:
        Loaded DataFrame
    """
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"File not found: {filepath}")

    dataframe = pd.read_csv(filepath, float_precision="round_trip")
    if columns is not None:
        missing = [c for c in columns if c not in dataframe.columns]
        if missing:
            raise ValueError(f"{filepath} is missing columns {missing}")
    return dataframe


def ensure_directory(directory: PathLike) -> str:
    """
    Ensure directory exists, create if it doesn't.

    Args:
        directory: Directory path

    Returns:
        Directory path
    """
    os.makedirs(directory, exist_ok=True)
    return str(directory)


def _grid_frame(grid: np.ndarray, first: str, second: str) -> pd.DataFrame:
    n_rows, n_cols = grid.shape
    rows, cols = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing="ij")
    return pd.DataFrame({first: rows.ravel(), second: cols.ravel()})


def _frame_grid(dataframe: pd.DataFrame, first: str, second: str, values: np.ndarray) -> np.ndarray:
    n = int(max(dataframe[first].max(), dataframe[second].max())) + 1
    if len(dataframe) != n * n:
        raise ValueError(f"expected {n * n} rows for an {n}x{n} grid, got {len(dataframe)}")
    grid = np.zeros((n, n), dtype=values.dtype)
    grid[dataframe[first].to_numpy(), dataframe[second].to_numpy()] = values
    return grid


def grid_to_frame(grid: np.ndarray) -> pd.DataFrame:
    """Complex (p, q) grid as p,q,re,im rows."""
    grid = np.asarray(grid, dtype=complex)
    frame = _grid_frame(grid, "p", "q")
    frame["re"] = grid.real.ravel()
    frame["im"] = grid.imag.ravel()
    return frame


def frame_to_grid(dataframe: pd.DataFrame) -> np.ndarray:
    values = dataframe["re"].to_numpy() + 1j * dataframe["im"].to_numpy()
    return _frame_grid(dataframe, "p", "q", values)


def save_symbol_csv(grid: np.ndarray, filepath: PathLike) -> str:
    return save_to_csv(grid_to_frame(grid), filepath)


def load_symbol_csv(filepath: PathLike) -> np.ndarray:
    return frame_to_grid(load_csv(filepath, SYMBOL_COLUMNS))


def save_distribution_csv(grid: np.ndarray, filepath: PathLike) -> str:
    """Real (p, q) grid as p,q,value rows."""
    grid = np.asarray(grid, dtype=float)
    frame = _grid_frame(grid, "p", "q")
    frame["value"] = grid.ravel()
    return save_to_csv(frame, filepath)


def load_distribution_csv(filepath: PathLike) -> np.ndarray:
    frame = load_csv(filepath, DISTRIBUTION_COLUMNS)
    return _frame_grid(frame, "p", "q", frame["value"].to_numpy(dtype=float))


def load_grid_csv(filepath: PathLike) -> np.ndarray:
    """Read either grid layout: p,q,value (real) or p,q,re,im (complex)."""
    frame = load_csv(filepath)
    if "value" in frame.columns:
        return _frame_grid(frame, "p", "q", frame["value"].to_numpy(dtype=float))
    missing = [c for c in SYMBOL_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{filepath} is missing columns {missing}")
    return frame_to_grid(frame)


def save_matrix_csv(matrix: np.ndarray, filepath: PathLike) -> str:
    """Complex matrix as row,col,re,im rows."""
    matrix = np.asarray(matrix, dtype=complex)
    frame = _grid_frame(matrix, "row", "col")
    frame["re"] = matrix.real.ravel()
    frame["im"] = matrix.imag.ravel()
    return save_to_csv(frame, filepath)


def load_matrix_csv(filepath: PathLike) -> np.ndarray:
    frame = load_csv(filepath, MATRIX_COLUMNS)
    values = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    return _frame_grid(frame, "row", "col", values)


def utc_timestamp(moment: Optional[datetime] = None) -> str:
    """ISO-8601 UTC timestamp."""
    moment = moment or datetime.now(pytz.utc)
    if moment.tzinfo is None:
        moment = pytz.utc.localize(moment)
    return moment.astimezone(pytz.utc).isoformat()


def parse_timestamp(text: str) -> datetime:
    return date_parser.isoparse(text)


def save_json(payload: Dict[str, Any], filepath: PathLike) -> str:
    filepath = str(filepath)
    ensure_directory(os.path.dirname(filepath) or ".")
    with open(filepath, "w") as handle:
        json.dump(payload, handle, indent=2)
    logger.debug("JSON saved to %s", filepath)
    return filepath


def load_json(filepath: PathLike) -> Dict[str, Any]:
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"File not found: {filepath}")
    with open(filepath) as handle:
        return json.load(handle)


def grid_envelope(grid: np.ndarray, kind: str, normalization: float,
                  timestamp: Optional[str] = None, **metadata) -> Dict[str, Any]:
    """
    JSON envelope for a phase-space grid.

    Args:
        grid: N x N grid, real or complex
        kind: Distribution kind label
        normalization: (1/N) sum of the grid
        timestamp: ISO timestamp, defaults to now in UTC
        **metadata: Extra keys stored alongside

    Returns:
        Dictionary ready for json.dump
    """
    grid = np.asarray(grid)
    envelope = {
        "N": int(grid.shape[0]),
        "kind": kind,
        "timestamp": timestamp or utc_timestamp(),
        "normalization": float(normalization),
        "grid": np.real(grid).astype(float).tolist(),
    }
    if np.iscomplexobj(grid):
        envelope["imag"] = np.imag(grid).astype(float).tolist()
    envelope.update(metadata)
    return envelope


def envelope_grid(envelope: Dict[str, Any]) -> np.ndarray:
    grid = np.array(envelope["grid"], dtype=float)
    if "imag" in envelope:
        grid = grid + 1j * np.array(envelope["imag"], dtype=float)
    if grid.shape != (envelope["N"], envelope["N"]):
        raise ValueError(f"envelope grid has shape {grid.shape}, expected N={envelope['N']}")
    return grid
