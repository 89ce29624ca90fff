"""
Hamiltonians for the lattice propagators.

A HamiltonianSpec wraps either a fixed Hermitian matrix or a separable form
V(Q) * kappa(t) + T(P) whose parts the split-step integrator uses directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..core.space import DualBasisSpace, OperatorError, OperatorMatrix
from ..core.weyl import WeylSymbol, inverse_weyl, symbol_array
from ..utils.config import config
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

PRESETS = ("harmonic", "tight_binding", "kicked_rotor")


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """Hermitian generator on a DualBasisSpace, possibly time dependent."""

    space: DualBasisSpace
    name: str
    matrix: Optional[np.ndarray] = None
    potential: Optional[np.ndarray] = None
    kinetic: Optional[np.ndarray] = None
    modulation: Optional[Callable[[float], float]] = None
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.matrix is None and (self.potential is None or self.kinetic is None):
            raise OperatorError("HamiltonianSpec needs a matrix or both separable parts")
        if self.matrix is not None:
            matrix = np.asarray(self.matrix, dtype=complex)
            deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
            if deviation > config.TOLERANCES["hermitian"]:
                raise OperatorError(f"Hamiltonian must be Hermitian (max deviation {deviation:.3e})")
            matrix = (matrix + matrix.conj().T) / 2
            matrix.setflags(write=False)
            object.__setattr__(self, "matrix", matrix)
        else:
            # cached position-basis image of T(P)
            object.__setattr__(self, "_kinetic_matrix", self.space.momentum_function(self.kinetic))

    @property
    def time_dependent(self) -> bool:
        return self.modulation is not None

    @property
    def separable(self) -> bool:
        return self.potential is not None and self.kinetic is not None

    def parts_at(self, t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Diagonal values (V(q) * kappa(t), T(p))."""
        if not self.separable:
            raise OperatorError(f"Hamiltonian {self.name!r} has no separable V(Q) + T(P) form")
        scale = 1.0 if self.modulation is None else float(self.modulation(t))
        return scale * self.potential, self.kinetic

    def matrix_at(self, t: float = 0.0) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        potential, _ = self.parts_at(t)
        return np.diag(potential.astype(complex)) + self._kinetic_matrix

    def symbol_at(self, t: float = 0.0) -> WeylSymbol:
        return WeylSymbol(self.space, symbol_array(self.space, self.matrix_at(t)))

    def norm_at(self, t: float = 0.0) -> float:
        """Spectral norm, the stability scale for explicit integrators."""
        return float(np.linalg.norm(self.matrix_at(t), 2))


def from_matrix(op: OperatorMatrix, name: str = "matrix") -> HamiltonianSpec:
    return HamiltonianSpec(op.space, name, matrix=op.q_entries)


def from_symbol(sym: WeylSymbol, name: str = "symbol") -> HamiltonianSpec:
    if sym.max_imag() > config.TOLERANCES["imag_symbol"]:
        raise OperatorError(f"Hamiltonian symbol must be real (max |imag| {sym.max_imag():.3e})")
    return HamiltonianSpec(sym.space, name, matrix=inverse_weyl(sym).entries)


def harmonic(space: DualBasisSpace, omega0: float = 1.0, center: Optional[float] = None) -> HamiltonianSpec:
    """
    Lattice oscillator (omega0 N / 2 pi) [2 - cos(2 pi (Q - c) / N) - cos(2 pi (P - c) / N)].

    Args:
        space: Lattice
        omega0: Small-amplitude angular frequency
        center: Orbit center c on both axes, defaults to (N - 1) / 2

    Returns:
        Separable, time-independent HamiltonianSpec
    """
    n = space.n
    center = (n - 1) / 2 if center is None else float(center)
    scale = omega0 * n / (2 * np.pi)
    profile = scale * (1.0 - np.cos(2 * np.pi * (space.lattice - center) / n))
    return HamiltonianSpec(
        space, "harmonic", potential=profile, kinetic=profile.copy(),
        params={"omega0": omega0, "center": center},
    )


def tight_binding(space: DualBasisSpace, hopping: float = 1.0, onsite: float = 0.0) -> HamiltonianSpec:
    """Nearest-neighbour ring eps - t (S + S^dagger) = eps - 2 t cos(2 pi P / N)."""
    kinetic = -2.0 * hopping * np.cos(2 * np.pi * space.lattice / space.n)
    potential = np.full(space.n, float(onsite))
    return HamiltonianSpec(
        space, "tight_binding", potential=potential, kinetic=kinetic,
        params={"hopping": hopping, "onsite": onsite},
    )


def pulse_train(period: float, width: float) -> Callable[[float], float]:
    """Rectangular pulses of the given width, unit area per period."""
    if period <= 0 or not 0 < width <= period:
        raise ValueError(f"pulse train needs 0 < width <= period, got width={width}, period={period}")

    def kappa(t: float) -> float:
        return 1.0 / width if (t % period) < width else 0.0

    return kappa


def kicked_rotor(space: DualBasisSpace, kick: float = 1.0, period: float = 1.0,
                 width: Optional[float] = None) -> HamiltonianSpec:
    """(2 pi / N) P~^2 / 2 + K kappa(t) cos(2 pi Q / N) with centered momenta P~."""
    width = period / 10.0 if width is None else float(width)
    momenta = space.centered(space.lattice).astype(float)
    kinetic = (2 * np.pi / space.n) * momenta**2 / 2
    potential = kick * np.cos(2 * np.pi * space.lattice / space.n)
    return HamiltonianSpec(
        space, "kicked_rotor", potential=potential, kinetic=kinetic,
        modulation=pulse_train(period, width),
        params={"kick": kick, "period": period, "width": width},
    )


def preset(space: DualBasisSpace, name: str, **params) -> HamiltonianSpec:
    builders = {"harmonic": harmonic, "tight_binding": tight_binding, "kicked_rotor": kicked_rotor}
    if name not in builders:
        raise ValueError(f"unknown Hamiltonian preset {name!r}; choose from {PRESETS}")
    logger.debug("Building preset %s on N=%d with %s", name, space.n, params)
    return builders[name](space, **params)
