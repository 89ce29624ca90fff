"""
Energy-resolved transport with injection and relaxation.

Each slice stores -i G^<(p, E, q) and Sigma^< enters as -i Sigma^<; the
equation is linear in that pair, so the rescaled grids obey

    df/dt = S(H, f) + S(Sigma, Re G^r) + C(Sigma, A) - C(Gamma, f)

with S(X, Y) = symbol(-i[X, Y]) and C(X, Y) = symbol((XY + YX) / 2).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from ..core.space import DualBasisSpace, _frozen
from ..core.weyl import WeylSymbol, anticommutator_symbol, commutator_symbol
from ..utils.config import config
from ..utils.file_utils import ensure_directory, save_distribution_csv, save_json, utc_timestamp
from ..utils.logging_utils import get_logger
from .distributions import QuasiDistribution
from .dynamics import rk4_step

logger = get_logger(__name__)

INPUT_NAMES = ("hamiltonian", "sigma_less", "gamma", "re_gr", "spectral")


class TransportInputError(ValueError):
    """Transport inputs are inconsistent or unphysical."""


def _as_stack(space: DualBasisSpace, grid, label: str) -> np.ndarray:
    """Broadcast a scalar, an N x N grid or an M x N x N stack to float arrays."""
    array = np.asarray(grid, dtype=float)
    n = space.n
    if array.ndim == 0:
        return np.full((n, n), float(array))
    if array.shape == (n, n) or (array.ndim == 3 and array.shape[1:] == (n, n)):
        return array
    raise TransportInputError(f"{label} must be a scalar, an {n}x{n} grid or an (M, {n}, {n}) stack, got {array.shape}")


@dataclass(frozen=True, eq=False)
class TransportInputs:
    """Real symbols driving the transport equation, shared or one per energy slice."""

    space: DualBasisSpace
    hamiltonian: np.ndarray = 0.0
    sigma_less: np.ndarray = 0.0
    gamma: np.ndarray = 0.0
    re_gr: np.ndarray = 0.0
    spectral: np.ndarray = 0.0

    def __post_init__(self):
        for name in INPUT_NAMES:
            object.__setattr__(self, name, _frozen(_as_stack(self.space, getattr(self, name), name)))
        tol = config.TOLERANCES["structure"]
        if self.gamma.min() < -tol:
            raise TransportInputError(f"broadening Gamma must be >= 0, found {self.gamma.min():.3e}")
        if self.spectral.min() < -tol:
            raise TransportInputError(f"spectral function A must be >= 0, found {self.spectral.min():.3e}")

    def slices(self) -> int:
        """Number of energy slices the inputs resolve, 1 when all are shared."""
        counts = {getattr(self, name).shape[0] for name in INPUT_NAMES if getattr(self, name).ndim == 3}
        if len(counts) > 1:
            raise TransportInputError(f"energy-resolved inputs disagree on the slice count: {sorted(counts)}")
        return counts.pop() if counts else 1

    def slice_grids(self, index: int) -> Dict[str, np.ndarray]:
        grids = {}
        for name in INPUT_NAMES:
            value = getattr(self, name)
            grids[name] = value[index] if value.ndim == 3 else value
        return grids


@dataclass(frozen=True, eq=False)
class EnergyResolvedSymbols:
    """Slices f_k(p, q) = -i G^<(p, E_k, q) on an increasing energy mesh."""

    space: DualBasisSpace
    energies: np.ndarray
    grids: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        energies = np.atleast_1d(np.asarray(self.energies, dtype=float))
        grids = np.asarray(self.grids)
        if energies.size == 0:
            raise TransportInputError("energy mesh is empty")
        if energies.size > 1 and np.any(np.diff(energies) <= 0):
            raise TransportInputError("energy mesh must be strictly increasing")
        if grids.shape != (energies.size, self.space.n, self.space.n):
            raise TransportInputError(
                f"expected {energies.size} slices of {self.space.n}x{self.space.n}, got {grids.shape}"
            )
        object.__setattr__(self, "energies", _frozen(energies))
        object.__setattr__(self, "grids", _frozen(grids))

    def with_grids(self, grids: np.ndarray) -> "EnergyResolvedSymbols":
        return EnergyResolvedSymbols(self.space, self.energies, grids, self.weight)

    def totals(self) -> np.ndarray:
        """(1/N) sum of each slice."""
        return np.real(self.grids.sum(axis=(1, 2))) / self.space.n


class _SliceOperators:
    """One slice's inputs as symbols, with the f-independent source precomputed."""

    def __init__(self, space: DualBasisSpace, grids: Dict[str, np.ndarray]) -> None:
        self.space = space
        self.h = WeylSymbol(space, grids["hamiltonian"])
        self.gamma = WeylSymbol(space, grids["gamma"])
        sigma = WeylSymbol(space, grids["sigma_less"])
        # S(Sigma, Re G^r) + C(Sigma, A)
        self.source = (
            commutator_symbol(sigma, WeylSymbol(space, grids["re_gr"]))
            + anticommutator_symbol(sigma, WeylSymbol(space, grids["spectral"]))
        ).grid

    def rhs(self, grid: np.ndarray) -> np.ndarray:
        f = WeylSymbol(self.space, grid)
        return commutator_symbol(self.h, f).grid - anticommutator_symbol(self.gamma, f).grid + self.source


def transport_rhs(space: DualBasisSpace, grid: np.ndarray, grids: Dict[str, np.ndarray]) -> np.ndarray:
    """df/dt of one slice for the given input grids."""
    return _SliceOperators(space, grids).rhs(grid)


class TransportStepper:
    """Steps every energy slice with rk4; slices run concurrently when workers > 1."""

    def __init__(self, inputs: TransportInputs, max_workers: Optional[int] = None) -> None:
        self.inputs = inputs
        self.workers = config.max_workers(max_workers)
        self._operators: Dict[int, _SliceOperators] = {}

    def operators(self, index: int) -> _SliceOperators:
        key = index if self.inputs.slices() > 1 else 0
        if key not in self._operators:
            self._operators[key] = _SliceOperators(self.inputs.space, self.inputs.slice_grids(key))
        return self._operators[key]

    def step(self, f: EnergyResolvedSymbols, dt: float) -> EnergyResolvedSymbols:
        count = self.inputs.slices()
        if count > 1 and count != f.energies.size:
            raise TransportInputError(f"inputs resolve {count} energies, symbols carry {f.energies.size}")
        if f.space.n != self.inputs.space.n:
            raise TransportInputError(f"symbols live on N={f.space.n}, inputs on N={self.inputs.space.n}")
        operators = [self.operators(k) for k in range(f.energies.size)]
        grids = [np.asarray(g, dtype=complex) for g in f.grids]
        if self.workers > 1 and len(grids) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                stepped = list(executor.map(lambda pair: rk4_step(pair[0].rhs, pair[1], dt), zip(operators, grids)))
        else:
            stepped = [rk4_step(ops.rhs, grid, dt) for ops, grid in zip(operators, grids)]
        return f.with_grids(np.stack(stepped))


def transport_step(f: EnergyResolvedSymbols, inputs: TransportInputs, dt: float,
                   max_workers: Optional[int] = None) -> EnergyResolvedSymbols:
    """
    One rk4 step of every energy slice.

    Args:
        f: Energy-resolved symbols
        inputs: Transport inputs on the same space and energy mesh
        dt: Time step
        max_workers: Slice-level parallelism

    Returns:
        Updated EnergyResolvedSymbols
    """
    return TransportStepper(inputs, max_workers).step(f, dt)


def energy_integrate(f: EnergyResolvedSymbols) -> QuasiDistribution:
    """Trapezoid over E; a single slice is scaled by its weight."""
    if f.energies.size == 1:
        grid = f.grids[0] * f.weight
    else:
        grid = trapezoid(f.grids, x=f.energies, axis=0)
    grid = np.asarray(grid)
    if np.iscomplexobj(grid) and np.max(np.abs(grid.imag)) <= config.TOLERANCES["imag_symbol"]:
        grid = grid.real
    return QuasiDistribution(f.space, grid, "wigner")


@dataclass
class TransportTrajectory:
    times: List[float] = field(default_factory=list)
    distributions: List[QuasiDistribution] = field(default_factory=list)
    totals: List[np.ndarray] = field(default_factory=list)


def run_transport(f0: EnergyResolvedSymbols, inputs: TransportInputs, dt: float, steps: int,
                  stride: int = 1, max_workers: Optional[int] = None) -> TransportTrajectory:
    """Step `steps` times, recording the energy-integrated distribution every `stride` steps."""
    if steps < 1 or stride < 1 or steps % stride:
        raise TransportInputError(f"need positive steps divisible by stride, got steps={steps}, stride={stride}")
    stepper = TransportStepper(inputs, max_workers)
    trajectory = TransportTrajectory()
    current = f0

    def record(t: float) -> None:
        trajectory.times.append(t)
        trajectory.distributions.append(energy_integrate(current))
        trajectory.totals.append(current.totals())

    record(0.0)
    for step in range(1, steps + 1):
        current = stepper.step(current, dt)
        if not np.all(np.isfinite(current.grids)):
            raise TransportInputError(f"non-finite transport grid at step {step}")
        if step % stride == 0:
            record(step * dt)
    logger.info("Transport finished: %d slices, %d snapshots", f0.energies.size, len(trajectory.times))
    return trajectory


def save_transport(trajectory: TransportTrajectory, directory: Union[str, Path], metadata: Optional[dict] = None) -> Path:
    directory = Path(ensure_directory(directory))
    entries = []
    for index, (t, dist) in enumerate(zip(trajectory.times, trajectory.distributions)):
        path = config.get_file_path("transport_snapshot", directory, index=index)
        save_distribution_csv(np.real(dist.grid), path)
        entries.append({"index": index, "time": t, "file": path.name, "total": dist.total()})
    manifest = {"created": utc_timestamp(), "snapshots": entries, **(metadata or {})}
    manifest_path = config.get_file_path("manifest", directory)
    save_json(manifest, manifest_path)
    return manifest_path


def constant_symbols(space: DualBasisSpace, energies: Sequence[float], value: float = 0.0) -> EnergyResolvedSymbols:
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    return EnergyResolvedSymbols(space, energies, np.full((energies.size, space.n, space.n), float(value)))
