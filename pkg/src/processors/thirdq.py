"""
Third-quantization layer on the lattice modes |q>.

Field operators are never built; everything works on the correlation matrix
G[a, b] = <psi^dagger(b) psi(a)> and on coefficient tables of one- and
two-body operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import linalg

from ..core.space import DualBasisSpace, OperatorError, OperatorMatrix, _frozen
from ..core.weyl import WeylSymbol, operator_array, symbol_array
from ..utils.config import config
from ..utils.file_utils import load_matrix_csv, save_matrix_csv
from ..utils.logging_utils import get_logger
from .distributions import QuasiDistribution

logger = get_logger(__name__)

STATISTICS = ("boson", "fermion")
EXCHANGE_SIGN = {"boson": 1.0, "fermion": -1.0}


def _check_statistics(statistics: str) -> str:
    if statistics not in STATISTICS:
        raise ValueError(f"statistics must be one of {STATISTICS}, got {statistics!r}")
    return statistics


@dataclass(frozen=True, eq=False)
class CorrelationState:
    """Equal-time lesser function G[a, b] = <psi^dagger(b) psi(a)> over the lattice modes."""

    space: DualBasisSpace
    matrix: np.ndarray
    statistics: str = "fermion"

    def __post_init__(self):
        _check_statistics(self.statistics)
        matrix = np.asarray(self.matrix, dtype=complex)
        n = self.space.n
        if matrix.shape != (n, n):
            raise OperatorError(f"correlation matrix must be {n}x{n}, got shape {matrix.shape}")
        deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
        if deviation > config.TOLERANCES["hermitian"]:
            raise OperatorError(f"correlation matrix must be Hermitian (max deviation {deviation:.3e})")
        occupations = linalg.eigvalsh((matrix + matrix.conj().T) / 2)
        tol = config.TOLERANCES["occupancy"]
        if occupations.min() < -tol:
            raise OperatorError(f"correlation matrix has negative occupation {occupations.min():.3e}")
        if self.statistics == "fermion" and occupations.max() > 1 + tol:
            raise OperatorError(f"fermion occupation {occupations.max():.12g} exceeds 1")
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def particle_number(self) -> float:
        return float(np.trace(self.matrix).real)

    def occupations(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)

    def evolved(self, matrix: np.ndarray) -> "CorrelationState":
        return CorrelationState(self.space, matrix, self.statistics)


@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    """Field coefficients psi(q) of a single-particle state over the lattice modes."""

    space: DualBasisSpace
    coefficients: np.ndarray
    statistics: str = "fermion"

    def __post_init__(self):
        _check_statistics(self.statistics)
        coefficients = np.asarray(self.coefficients, dtype=complex)
        if coefficients.shape != (self.space.n,):
            raise ValueError(f"need {self.space.n} mode coefficients, got shape {coefficients.shape}")
        object.__setattr__(self, "coefficients", _frozen(coefficients))

    def to_momentum(self) -> np.ndarray:
        """psi(p) = sum_q <p|q> psi(q)."""
        return self.space.overlap @ self.coefficients

    @classmethod
    def from_momentum(cls, space: DualBasisSpace, coefficients: np.ndarray, statistics: str = "fermion") -> "ModeDecomposition":
        return cls(space, space.overlap.conj().T @ np.asarray(coefficients, dtype=complex), statistics)

    def correlation(self) -> CorrelationState:
        """Rank-one G[a, b] = psi(a) psi(b)^* of the normalized single-particle state."""
        ket = self.coefficients / np.linalg.norm(self.coefficients)
        return CorrelationState(self.space, np.outer(ket, ket.conj()), self.statistics)


def klimontovich_average(corr: CorrelationState) -> QuasiDistribution:
    """
    Expectation of the Klimontovich operator:
    grid[p, q] = sum_v w**(2 p v) G[q - v, q + v].

    Args:
        corr: Correlation state

    Returns:
        Real wigner-kind QuasiDistribution normalized to the particle number
    """
    grid = symbol_array(corr.space, corr.matrix)
    imag = float(np.max(np.abs(grid.imag)))
    if imag > config.TOLERANCES["imag_symbol"]:
        raise OperatorError(f"Klimontovich average is not real (max |imag| {imag:.3e})")
    return QuasiDistribution(corr.space, grid.real, "wigner")


def correlation_from_distribution(dist: QuasiDistribution, statistics: str = "fermion") -> CorrelationState:
    """Inverse of klimontovich_average."""
    matrix = operator_array(dist.space, np.asarray(dist.grid, dtype=complex))
    return CorrelationState(dist.space, matrix, statistics)


def assemble_one_body(op: OperatorMatrix) -> np.ndarray:
    """
    Two-point table V(r, r') of A = sum V(1, 2) psi^dagger(1) psi(2).

    The table is rebuilt from the Weyl symbol by the momentum sum
    V[q + v, q - v] = (1/N) sum_p w**(2 p v) A(p, q) and checked against the
    matrix elements <r|A|r'>.
    """
    space = op.space
    entries = op.q_entries
    symbol = symbol_array(space, entries)
    n = space.n
    rebuilt = np.zeros((n, n), dtype=complex)
    for v in range(n):
        phases = space.phase(2 * space.lattice * v)  # indexed by p
        column = phases @ symbol / n  # indexed by q
        rebuilt[np.mod(space.lattice + v, n), np.mod(space.lattice - v, n)] = column
    error = float(np.max(np.abs(rebuilt - entries)))
    if error > config.TOLERANCES["one_body_chain"] * max(1.0, float(np.max(np.abs(entries)))):
        raise OperatorError(f"one-body table disagrees with the matrix elements by {error:.3e}")
    return np.array(entries)


def one_body_expectation(table: np.ndarray, corr: Union[CorrelationState, np.ndarray]) -> complex:
    """sum V(1, 2) G[2, 1], equal to Tr(A G)."""
    g = corr.matrix if isinstance(corr, CorrelationState) else np.asarray(corr)
    return complex(np.einsum("ab,ba->", table, g))


def assemble_two_body(a2: np.ndarray) -> np.ndarray:
    """
    Four-point table V(1, 2, 3, 4) of A = sum V psi^dagger(1) psi^dagger(2) psi(3) psi(4).

    Args:
        a2: Table <r r'|A|r'' r'''> over any number of modes

    Returns:
        Copy of the table after checking V(1, 2, 3, 4) = V(4, 3, 2, 1)^*
    """
    table = np.asarray(a2, dtype=complex)
    if table.ndim != 4 or len(set(table.shape)) != 1:
        raise OperatorError(f"two-body table must have shape (M, M, M, M), got {table.shape}")
    error = float(np.max(np.abs(table - table.transpose(3, 2, 1, 0).conj()))) if table.size else 0.0
    if error > config.TOLERANCES["two_body_symmetry"]:
        raise OperatorError(f"two-body table violates Hermitian pair symmetry by {error:.3e}")
    return table.copy()


def contact_interaction(modes: int, strength: float) -> np.ndarray:
    """Density-density table V = U delta_14 delta_23."""
    eye = np.eye(modes)
    return strength * np.einsum("ad,bc->abcd", eye, eye).astype(complex)


def wick_expectation(table: np.ndarray, g: Union[CorrelationState, np.ndarray], statistics: str = "fermion") -> complex:
    """Gaussian-state value sum V (G[4, 1] G[3, 2] +- G[3, 1] G[4, 2])."""
    statistics = _check_statistics(statistics)
    g = g.matrix if isinstance(g, CorrelationState) else np.asarray(g, dtype=complex)
    direct = np.einsum("abcd,da,cb->", table, g, g)
    exchange = np.einsum("abcd,ca,db->", table, g, g)
    return complex(direct + EXCHANGE_SIGN[statistics] * exchange)


def _h_matrix(h: Union[OperatorMatrix, np.ndarray]) -> np.ndarray:
    matrix = h.q_entries if isinstance(h, OperatorMatrix) else np.asarray(h, dtype=complex)
    deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
    if deviation > config.TOLERANCES["hermitian"]:
        raise OperatorError(f"single-particle Hamiltonian must be Hermitian (max deviation {deviation:.3e})")
    return matrix


def ballistic_step_corr(corr: CorrelationState, h: Union[OperatorMatrix, np.ndarray], dt: float) -> CorrelationState:
    """G -> U G U^dagger with U = exp(-i h dt)."""
    energies, vectors = linalg.eigh(_h_matrix(h))
    unitary = (vectors * np.exp(-1j * energies * dt)[None, :]) @ vectors.conj().T
    return corr.evolved(unitary @ corr.matrix @ unitary.conj().T)


def h_symbol(h: Union[OperatorMatrix, np.ndarray], space: DualBasisSpace) -> WeylSymbol:
    return WeylSymbol(space, symbol_array(space, _h_matrix(h)))


def save_correlation_csv(corr: CorrelationState, filepath) -> str:
    return save_matrix_csv(corr.matrix, filepath)


def load_correlation_csv(space: DualBasisSpace, filepath, statistics: str = "fermion") -> CorrelationState:
    return CorrelationState(space, load_matrix_csv(filepath), statistics)
