"""
Phase-space time evolution.

Three engines advance a Weyl symbol f(p, q, t) under df/dt = symbol(-i[H, rho]):
the exact density-matrix oracle, rk4 on the spectral commutator path, and rk4
on the lattice Moyal kernel. Snapshots carry the conserved quantities.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np
import pandas as pd
from scipy import linalg

from ..core.space import DualBasisSpace, OperatorError, OperatorMatrix
from ..core.weyl import WeylSymbol, operator_array, symbol_array
from ..utils.config import config
from ..utils.file_utils import (
    ensure_directory,
    save_distribution_csv,
    save_json,
    save_symbol_csv,
    utc_timestamp,
)
from ..utils.logging_utils import get_logger
from .distributions import QuasiDistribution, symbol_distribution, wigner_of
from .hamiltonians import HamiltonianSpec, from_matrix, from_symbol

logger = get_logger(__name__)

ENGINES = ("oracle", "spectral_moyal", "kernel_quadrature")
INTEGRATORS = ("rk4", "split_step")
GRADIENT_ORDERS = (1, 3, 5)

HamiltonianLike = Union[HamiltonianSpec, WeylSymbol, OperatorMatrix]


class PropagationError(RuntimeError):
    """Propagation produced non-finite values."""

    def __init__(self, step: int, message: str = "non-finite values in the symbol grid"):
        self.step = step
        super().__init__(f"step {step}: {message}")


@dataclass(frozen=True)
class PropagatorConfig:
    engine: str = config.ENGINE_SETTINGS["engine"]
    dt: float = config.ENGINE_SETTINGS["dt"]
    steps: int = config.ENGINE_SETTINGS["steps"]
    integrator: str = config.ENGINE_SETTINGS["integrator"]
    stride: int = config.ENGINE_SETTINGS["stride"]

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.integrator == "split_step" and self.engine != "spectral_moyal":
            raise ValueError("split_step integrator is available for the spectral_moyal engine only")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError(f"stride must be a positive integer, got {self.stride}")
        if self.steps % self.stride:
            raise ValueError(f"stride {self.stride} must divide steps {self.steps}")

    @property
    def total_time(self) -> float:
        return self.dt * self.steps


def as_hamiltonian(h: HamiltonianLike) -> HamiltonianSpec:
    if isinstance(h, HamiltonianSpec):
        return h
    if isinstance(h, WeylSymbol):
        return from_symbol(h)
    if isinstance(h, OperatorMatrix):
        return from_matrix(h)
    raise TypeError(f"cannot use {type(h).__name__} as a Hamiltonian")


# --- right-hand sides ---------------------------------------------------------

def commutator_rhs(space: DualBasisSpace, h_matrix: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Symbol grid of -i[H, rho] for a position-basis H and a symbol grid of rho."""
    rho = operator_array(space, grid)
    return symbol_array(space, -1j * (h_matrix @ rho - rho @ h_matrix))


def moyal_rhs(h: HamiltonianLike, f: WeylSymbol, t: float = 0.0) -> WeylSymbol:
    """
    Exact lattice Moyal bracket, the symbol of -i[H, rho].

    Args:
        h: Hermitian Hamiltonian in any representation
        f: Weyl symbol of rho
        t: Time at which a time-dependent H is sampled

    Returns:
        WeylSymbol of df/dt
    """
    spec = as_hamiltonian(h)
    return WeylSymbol(f.space, commutator_rhs(f.space, spec.matrix_at(t), f.grid))


def _spectral_derivative(space: DualBasisSpace, grid: np.ndarray, position_order: int, momentum_order: int) -> np.ndarray:
    """d^a/dq^a d^b/dk^b with k = 2 pi p / N, by trigonometric interpolation."""
    n = space.n
    wavenumbers = space.centered(space.lattice).astype(float)
    result = grid
    if position_order:
        multiplier = (2j * np.pi * wavenumbers / n) ** position_order
        result = np.fft.ifft(np.fft.fft(result, axis=1) * multiplier[None, :], axis=1)
    if momentum_order:
        # d/dk = (N / 2 pi) d/dp
        multiplier = (1j * wavenumbers) ** momentum_order
        result = np.fft.ifft(np.fft.fft(result, axis=0) * multiplier[:, None], axis=0)
    return result


def gradient_expansion_rhs(h: HamiltonianLike, f: WeylSymbol, order: int = 1, t: float = 0.0) -> WeylSymbol:
    """
    Truncated series 2 H sin(L / 2) f, L = d_q<- d_k-> - d_k<- d_q->, effective hbar N / 2 pi.

    Approximate: the series does not terminate on the lattice. Order 1 is the
    Poisson bracket.
    """
    if order not in GRADIENT_ORDERS:
        raise ValueError(f"gradient expansion order must be one of {GRADIENT_ORDERS}, got {order}")
    logger.warning("Approximate gradient expansion of order %d", order)
    space = f.space
    h_grid = as_hamiltonian(h).symbol_at(t).grid
    # 2 sin(x / 2) = x - x^3 / 24 + x^5 / 1920
    coefficients = {1: 1.0, 3: -1.0 / 24.0, 5: 1.0 / 1920.0}

    rhs = np.zeros((space.n, space.n), dtype=complex)
    for n in range(1, order + 1, 2):
        term = np.zeros_like(rhs)
        for j in range(n + 1):
            h_part = _spectral_derivative(space, h_grid, j, n - j)
            f_part = _spectral_derivative(space, f.grid, n - j, j)
            term += comb(n, j) * (-1) ** (n - j) * h_part * f_part
        rhs += coefficients[n] * term
    return WeylSymbol(space, rhs)


# --- Moyal kernel ------------------------------------------------------------

def _kernel_block(space: DualBasisSpace, h_grid: np.ndarray, p: int) -> np.ndarray:
    """K[p, q, P, Q] for fixed p as a [q, P, Q] array."""
    n = space.n
    lat = space.lattice
    q = lat[:, None, None]
    d = lat[None, :, None]
    c = lat[None, None, :]
    difference = h_grid[np.mod(p - d, n), np.mod(q - c, n)] - h_grid[np.mod(p + d, n), np.mod(q + c, n)]
    by_c = n * np.fft.ifft(difference, axis=2)  # sum_c w**(k1 c)
    by_d = np.fft.fft(by_c, axis=1)  # sum_d w**(-k2 d)
    big_p = lat[None, :, None]
    big_q = lat[None, None, :]
    block = by_d[q, np.mod(2 * (q - big_q), n), np.mod(2 * (p - big_p), n)]
    return block / (1j * n**2)


@dataclass(frozen=True, eq=False)
class MoyalKernel:
    """Lattice kernel K(p, q; P, Q) with rhs(p, q) = sum_{P,Q} K f(P, Q)."""

    space: DualBasisSpace
    h_grid: np.ndarray
    dense: Optional[np.ndarray] = None

    def apply(self, f: Union[WeylSymbol, np.ndarray]) -> np.ndarray:
        grid = f.grid if isinstance(f, WeylSymbol) else np.asarray(f)
        if self.dense is None:
            return apply_factorized(self.space, self.h_grid, grid)
        n = self.space.n
        matrix = self.dense.reshape(n * n, n * n)
        flat = grid.reshape(n * n)
        if np.iscomplexobj(flat) and not np.iscomplexobj(matrix):
            # real kernel: real and imaginary parts go through separate real products
            return (matrix @ flat.real + 1j * (matrix @ flat.imag)).reshape(n, n)
        return (matrix @ flat).reshape(n, n)

    def apply_factorized(self, f: Union[WeylSymbol, np.ndarray]) -> np.ndarray:
        grid = f.grid if isinstance(f, WeylSymbol) else np.asarray(f)
        return apply_factorized(self.space, self.h_grid, grid)

    def as_matrix(self) -> np.ndarray:
        """Dense N^2 x N^2 form, building it when the kernel is factorized."""
        n = self.space.n
        dense = self.dense if self.dense is not None else _dense_kernel(self.space, self.h_grid)
        return dense.reshape(n * n, n * n)


def _dense_kernel(space: DualBasisSpace, h_grid: np.ndarray) -> np.ndarray:
    n = space.n
    kernel = np.empty((n, n, n, n), dtype=complex)
    for p in range(n):
        kernel[p] = _kernel_block(space, h_grid, p)
    imag = float(np.max(np.abs(kernel.imag)))
    if imag <= config.TOLERANCES["structure"] * max(1.0, float(np.max(np.abs(h_grid)))):
        return kernel.real
    return kernel


def apply_factorized(space: DualBasisSpace, h_grid: np.ndarray, f_grid: np.ndarray) -> np.ndarray:
    """Kernel application one p-row at a time, never holding more than N^3 entries."""
    n = space.n
    rhs = np.empty((n, n), dtype=complex)
    for p in range(n):
        rhs[p] = np.einsum("qab,ab->q", _kernel_block(space, h_grid, p), f_grid)
    return rhs


def build_kernel(h: HamiltonianLike, t: float = 0.0, dense: bool = True) -> MoyalKernel:
    """
    Lattice Moyal kernel of H sampled at time t.

    Args:
        h: Hamiltonian
        t: Sampling time for time-dependent H
        dense: Tabulate all N^4 entries; otherwise keep the factorized form

    Returns:
        MoyalKernel whose application equals moyal_rhs
    """
    spec = as_hamiltonian(h)
    h_grid = spec.symbol_at(t).grid
    space = spec.space
    kernel = _dense_kernel(space, h_grid) if dense else None
    return MoyalKernel(space=space, h_grid=h_grid, dense=kernel)


# --- trajectories ------------------------------------------------------------

@dataclass
class Snapshot:
    step: int
    time: float
    grid: np.ndarray
    trace: float
    purity: float
    energy: float
    max_imag: float


@dataclass
class Trajectory:
    space: DualBasisSpace
    engine: str
    integrator: str
    dt: float
    steps: int
    stride: int
    hamiltonian: str
    snapshots: List[Snapshot] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def symbols(self) -> List[WeylSymbol]:
        return [WeylSymbol(self.space, s.grid) for s in self.snapshots]

    def distributions(self) -> List[QuasiDistribution]:
        return [symbol_distribution(symbol) for symbol in self.symbols()]

    def conserved(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"step": s.step, "time": s.time, "trace": s.trace, "purity": s.purity,
                 "energy": s.energy, "max_imag": s.max_imag}
                for s in self.snapshots
            ]
        )

    def drift(self, column: str) -> float:
        values = self.conserved()[column].to_numpy()
        return float(np.max(np.abs(values - values[0])))


class Propagator:
    """Advances one symbol trajectory under a fixed engine and integrator."""

    def __init__(self, hamiltonian: HamiltonianLike, cfg: PropagatorConfig) -> None:
        self.hamiltonian = as_hamiltonian(hamiltonian)
        self.cfg = cfg
        self.space = self.hamiltonian.space
        self.logger = get_logger(__name__)
        if cfg.integrator == "split_step" and not self.hamiltonian.separable:
            raise OperatorError(f"split_step needs a separable Hamiltonian, {self.hamiltonian.name!r} is not")
        self._kernel: Optional[MoyalKernel] = None

    # --- Public API -------------------------------------------------------------
    def run(self, f0: WeylSymbol) -> Trajectory:
        if f0.space.n != self.space.n:
            raise ValueError(f"symbol lives on N={f0.space.n}, Hamiltonian on N={self.space.n}")
        cfg = self.cfg
        trajectory = Trajectory(
            space=self.space, engine=cfg.engine, integrator=cfg.integrator, dt=cfg.dt,
            steps=cfg.steps, stride=cfg.stride, hamiltonian=self.hamiltonian.name,
        )
        self._check_step_size(trajectory)
        self.logger.info(
            "Propagating N=%d engine=%s integrator=%s dt=%g steps=%d",
            self.space.n, cfg.engine, cfg.integrator, cfg.dt, cfg.steps,
        )
        start = time.perf_counter()
        if cfg.engine == "oracle":
            self._run_oracle(f0, trajectory)
        else:
            self._run_stepper(f0, trajectory)
        trajectory.wall_time = time.perf_counter() - start
        self.logger.info(
            "Finished %d snapshots in %.3fs (trace drift %.2e)",
            len(trajectory.snapshots), trajectory.wall_time, trajectory.drift("trace"),
        )
        return trajectory

    # --- Internal Steps ---------------------------------------------------------
    def _check_step_size(self, trajectory: Trajectory) -> None:
        if self.cfg.engine == "oracle" or self.cfg.integrator != "rk4":
            return
        limit = config.ENGINE_SETTINGS["rk4_stability_limit"]
        scale = self.hamiltonian.norm_at(self.cfg.dt / 2) * self.cfg.dt
        if scale > limit:
            message = f"||H|| * dt = {scale:.3g} exceeds the rk4 stability limit {limit}"
            self.logger.warning(message)
            trajectory.warnings.append(message)

    def _snapshot(self, step: int, t: float, grid: np.ndarray) -> Snapshot:
        n = self.space.n
        h_grid = self.hamiltonian.symbol_at(t).grid
        return Snapshot(
            step=step,
            time=t,
            grid=grid.copy(),
            trace=float(np.real(grid.sum()) / n),
            purity=float(np.real(np.sum(grid * grid.conj())) / n),
            energy=float(np.real(np.sum(h_grid * grid)) / n),
            max_imag=float(np.max(np.abs(grid.imag))),
        )

    def _run_oracle(self, f0: WeylSymbol, trajectory: Trajectory) -> None:
        cfg = self.cfg
        rho = operator_array(self.space, f0.grid)
        trajectory.snapshots.append(self._snapshot(0, 0.0, f0.grid))
        if not self.hamiltonian.time_dependent:
            energies, vectors = linalg.eigh(self.hamiltonian.matrix_at(0.0))
            rho_eigen = vectors.conj().T @ rho @ vectors
            for step in range(cfg.stride, cfg.steps + 1, cfg.stride):
                t = step * cfg.dt
                phases = np.exp(-1j * energies * t)
                evolved = vectors @ (np.outer(phases, phases.conj()) * rho_eigen) @ vectors.conj().T
                grid = symbol_array(self.space, evolved)
                trajectory.snapshots.append(self._snapshot(step, t, grid))
            return
        for step in range(1, cfg.steps + 1):
            t_mid = (step - 0.5) * cfg.dt
            unitary = _unitary(self.hamiltonian.matrix_at(t_mid), cfg.dt)
            rho = unitary @ rho @ unitary.conj().T
            if step % cfg.stride == 0:
                trajectory.snapshots.append(self._snapshot(step, step * cfg.dt, symbol_array(self.space, rho)))

    def _run_stepper(self, f0: WeylSymbol, trajectory: Trajectory) -> None:
        cfg = self.cfg
        grid = np.array(f0.grid, dtype=complex)
        trajectory.snapshots.append(self._snapshot(0, 0.0, grid))
        advance = self._split_step if cfg.integrator == "split_step" else self._rk4_step
        for step in range(1, cfg.steps + 1):
            grid = advance(grid, (step - 1) * cfg.dt)
            if not np.all(np.isfinite(grid)):
                self.logger.error("Non-finite symbol at step %d", step)
                raise PropagationError(step)
            if step % cfg.stride == 0:
                trajectory.snapshots.append(self._snapshot(step, step * cfg.dt, grid))

    def _rhs(self, t_mid: float):
        """Right-hand side with H frozen at the step midpoint."""
        if self.cfg.engine == "kernel_quadrature":
            if self._kernel is None or self.hamiltonian.time_dependent:
                self._kernel = build_kernel(self.hamiltonian, t=t_mid)
            return self._kernel.apply
        h_matrix = self.hamiltonian.matrix_at(t_mid)
        return lambda grid: commutator_rhs(self.space, h_matrix, grid)

    def _rk4_step(self, grid: np.ndarray, t: float) -> np.ndarray:
        return rk4_step(self._rhs(t + self.cfg.dt / 2), grid, self.cfg.dt)

    def _split_step(self, grid: np.ndarray, t: float) -> np.ndarray:
        """Strang splitting V/2, T, V/2 on the density matrix."""
        dt = self.cfg.dt
        potential, kinetic = self.hamiltonian.parts_at(t + dt / 2)
        half = np.exp(-0.5j * dt * potential)
        full = np.exp(-1j * dt * kinetic)
        rho = operator_array(self.space, grid)
        rho = half[:, None] * rho * half.conj()[None, :]
        rho_p = self.space.to_momentum(rho)
        rho_p = full[:, None] * rho_p * full.conj()[None, :]
        rho = self.space.from_momentum(rho_p)
        rho = half[:, None] * rho * half.conj()[None, :]
        return symbol_array(self.space, rho)


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], grid: np.ndarray, dt: float) -> np.ndarray:
    """Classical fourth-order step for an autonomous right-hand side."""
    k1 = rhs(grid)
    k2 = rhs(grid + 0.5 * dt * k1)
    k3 = rhs(grid + 0.5 * dt * k2)
    k4 = rhs(grid + dt * k3)
    return grid + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _unitary(h_matrix: np.ndarray, dt: float) -> np.ndarray:
    energies, vectors = linalg.eigh(h_matrix)
    return (vectors * np.exp(-1j * energies * dt)[None, :]) @ vectors.conj().T


def propagate_symbol(f0: WeylSymbol, hamiltonian: HamiltonianLike, cfg: PropagatorConfig) -> Trajectory:
    """Evolve any Hermitian-operator symbol, density or not."""
    return Propagator(hamiltonian, cfg).run(f0)


def evolve(state0: OperatorMatrix, hamiltonian: HamiltonianLike, cfg: PropagatorConfig) -> Trajectory:
    """
    Evolve the Wigner function of a density operator.

    Args:
        state0: Density-tagged initial state
        hamiltonian: Hermitian generator
        cfg: Engine, step and snapshot settings

    Returns:
        Trajectory with snapshots every cfg.stride steps, step 0 included
    """
    initial = wigner_of(state0)
    return propagate_symbol(WeylSymbol(state0.space, initial.grid), hamiltonian, cfg)


def save_trajectory(trajectory: Trajectory, directory: Union[str, Path]) -> Path:
    """Snapshot CSVs plus a JSON manifest with the conserved-quantity log."""
    directory = Path(ensure_directory(directory))
    entries = []
    for index, snap in enumerate(trajectory.snapshots):
        path = config.get_file_path("snapshot", directory, index=index)
        if snap.max_imag <= config.TOLERANCES["imag_symbol"]:
            save_distribution_csv(snap.grid.real, path)
        else:
            save_symbol_csv(snap.grid, path)
        entries.append(
            {"index": index, "step": snap.step, "time": snap.time, "file": path.name,
             "trace": snap.trace, "purity": snap.purity, "energy": snap.energy, "max_imag": snap.max_imag}
        )
    manifest = {
        "engine": trajectory.engine,
        "integrator": trajectory.integrator,
        "N": trajectory.space.n,
        "dt": trajectory.dt,
        "steps": trajectory.steps,
        "stride": trajectory.stride,
        "hamiltonian": trajectory.hamiltonian,
        "warnings": trajectory.warnings,
        "created": utc_timestamp(),
        "wall_time_seconds": trajectory.wall_time,
        "snapshots": entries,
    }
    manifest_path = config.get_file_path("manifest", directory)
    save_json(manifest, manifest_path)
    logger.info("Trajectory saved: %d snapshots | manifest=%s", len(entries), manifest_path)
    return manifest_path
