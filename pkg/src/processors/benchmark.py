"""
Per-step timing of the propagator engines over a sweep of lattice sizes.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.space import make_space, random_density, random_hermitian
from ..core.weyl import symbol_array
from ..utils.config import config
from ..utils.file_utils import save_to_csv
from ..utils.logging_utils import get_logger
from .dynamics import apply_factorized, build_kernel, commutator_rhs, rk4_step
from .hamiltonians import HamiltonianSpec

logger = get_logger(__name__)

BENCH_ENGINES = ("spectral_moyal", "kernel_dense", "kernel_factorized")
COMPLEX_BYTES = 16
REAL_BYTES = 8


def allocation_estimate(engine: str, n: int) -> int:
    """Rough peak bytes held by one rk4 step of an engine."""
    # rk4 keeps the state, four stages and one temporary
    stages = 6 * n * n * COMPLEX_BYTES
    if engine == "spectral_moyal":
        return stages + 4 * n * n * COMPLEX_BYTES
    if engine == "kernel_dense":
        return stages + n**4 * REAL_BYTES
    if engine == "kernel_factorized":
        return stages + 3 * n**3 * COMPLEX_BYTES
    raise ValueError(f"unknown benchmark engine {engine!r}")


@dataclass
class BenchmarkReport:
    table: pd.DataFrame
    exponents: Dict[str, float] = field(default_factory=dict)
    crossover: Optional[int] = None

    def save(self, filepath) -> str:
        return save_to_csv(self.table, filepath)

    def wide(self) -> pd.DataFrame:
        """One row per N with a seconds-per-step column for each engine."""
        wide = self.table.pivot(index="N", columns="engine", values="seconds_per_step")
        wide.columns.name = None
        return wide.reset_index()


def _median_time(step: Callable[[np.ndarray], np.ndarray], grid: np.ndarray, repeats: int, steps: int) -> float:
    step(grid)  # warm-up
    samples = []
    for _ in range(repeats):
        current = grid
        start = time.perf_counter()
        for _ in range(steps):
            current = step(current)
        samples.append((time.perf_counter() - start) / steps)
    return float(np.median(samples))


def _time_size(n: int, repeats: int, steps: int, dt: float, seed: int) -> List[dict]:
    space = make_space(n)
    rng = np.random.default_rng(seed + n)
    h_matrix = random_hermitian(space, rng).entries
    grid = symbol_array(space, random_density(space, rng).entries)
    h_grid = symbol_array(space, h_matrix)

    build_start = time.perf_counter()
    kernel = build_kernel(HamiltonianSpec(space, "random", matrix=h_matrix), dense=True)
    build_seconds = time.perf_counter() - build_start

    steppers = {
        "spectral_moyal": lambda g: rk4_step(lambda x: commutator_rhs(space, h_matrix, x), g, dt),
        "kernel_dense": lambda g: rk4_step(kernel.apply, g, dt),
        "kernel_factorized": lambda g: rk4_step(lambda x: apply_factorized(space, h_grid, x), g, dt),
    }
    rows = []
    for engine, step in steppers.items():
        seconds = _median_time(step, grid, repeats, steps)
        rows.append(
            {"N": n, "engine": engine, "seconds_per_step": seconds,
             "allocations_estimate": allocation_estimate(engine, n)}
        )
        logger.info("N=%d engine=%s %.3es/step", n, engine, seconds)
    logger.info("N=%d dense kernel build %.3fs", n, build_seconds)
    return rows


def fit_exponent(sizes: Sequence[int], seconds: Sequence[float]) -> float:
    """Slope of log(seconds) against log(N)."""
    slope, _ = np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(np.asarray(seconds, dtype=float)), 1)
    return float(slope)


def benchmark_engines(sizes: Sequence[int], repeats: Optional[int] = None, steps: Optional[int] = None,
                      max_workers: Optional[int] = None, dt: float = 1e-3, seed: int = 0) -> BenchmarkReport:
    """
    Time one rk4 step of every engine for each lattice size.

    Args:
        sizes: Odd lattice sizes
        repeats: Timing repeats, the median is reported
        steps: Steps per timed run
        max_workers: Sweep points timed concurrently (environment override applies)
        dt: Step size
        seed: Seed for the random Hamiltonian and state

    Returns:
        BenchmarkReport with one row per (N, engine), fitted scaling exponents
        and the smallest N at which the spectral path beats the dense kernel
    """
    sizes = sorted({int(n) for n in sizes})
    if not sizes:
        raise ValueError("benchmark needs at least one lattice size")
    for n in sizes:
        make_space(n)
    repeats = repeats or config.BENCH_SETTINGS["repeats"]
    steps = steps or config.BENCH_SETTINGS["steps"]
    workers = config.max_workers(max_workers if max_workers is not None else config.BENCH_SETTINGS["max_workers"])
    logger.info("Benchmarking sizes=%s repeats=%d steps=%d workers=%d", sizes, repeats, steps, workers)

    rows: List[dict] = []
    if workers == 1:
        for n in sizes:
            rows.extend(_time_size(n, repeats, steps, dt, seed))
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            future_to_size = {executor.submit(_time_size, n, repeats, steps, dt, seed): n for n in sizes}
            for future in as_completed(future_to_size):
                rows.extend(future.result())

    table = pd.DataFrame(rows).sort_values(["N", "engine"]).reset_index(drop=True)
    exponents = {}
    if len(set(sizes)) > 1:
        for engine, group in table.groupby("engine"):
            exponents[engine] = fit_exponent(group["N"], group["seconds_per_step"])
    pivot = table.pivot(index="N", columns="engine", values="seconds_per_step")
    faster = pivot.index[pivot["spectral_moyal"] < pivot["kernel_dense"]]
    crossover = int(faster.min()) if len(faster) else None
    return BenchmarkReport(table=table, exponents=exponents, crossover=crossover)
