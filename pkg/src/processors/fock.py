"""
Brute-force fermionic Fock space for a handful of modes.

Used to check Gaussian-state (Wick) two-body expectations against exact
diagonalization; the cost grows as 2**M so M is capped at MAX_MODES.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import List

import numpy as np
from scipy import linalg

MAX_MODES = 4

_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |1> -> |0> in the (|0>, |1>) basis
_PARITY = np.diag([1.0, -1.0])


def annihilators(modes: int) -> List[np.ndarray]:
    """Jordan-Wigner c_j = Z x ... x Z x a x 1 x ... x 1 with mode 0 leftmost."""
    if not 1 <= modes <= MAX_MODES:
        raise ValueError(f"Fock oracle supports 1..{MAX_MODES} modes, got {modes}")
    operators = []
    for j in range(modes):
        factors = [_PARITY] * j + [_LOWER] + [np.eye(2)] * (modes - j - 1)
        operators.append(reduce(np.kron, factors))
    return operators


def number_sector(modes: int, particles: int) -> np.ndarray:
    """Indices of Fock basis states holding exactly `particles` fermions."""
    occupations = np.array([bin(index).count("1") for index in range(2**modes)])
    return np.flatnonzero(occupations == particles)


@dataclass(frozen=True, eq=False)
class FockState:
    modes: int
    particles: int
    vector: np.ndarray
    energy: float

    def correlation(self) -> np.ndarray:
        """G[a, b] = <c_b^dagger c_a>."""
        c = annihilators(self.modes)
        g = np.empty((self.modes, self.modes), dtype=complex)
        for a in range(self.modes):
            for b in range(self.modes):
                g[a, b] = self.vector.conj() @ (c[b].conj().T @ c[a]) @ self.vector
        return g

    def two_body_expectation(self, table: np.ndarray) -> complex:
        """sum V(1, 2, 3, 4) <c_1^dagger c_2^dagger c_3 c_4>."""
        c = annihilators(self.modes)
        cd = [op.conj().T for op in c]
        total = 0.0 + 0.0j
        for index in zip(*np.nonzero(np.abs(table) > 0)):
            a, b, s, d = index
            operator = cd[a] @ cd[b] @ c[s] @ c[d]
            total += table[a, b, s, d] * (self.vector.conj() @ operator @ self.vector)
        return complex(total)


def quadratic_hamiltonian(h: np.ndarray) -> np.ndarray:
    """Fock matrix of sum h[i, j] c_i^dagger c_j."""
    h = np.asarray(h, dtype=complex)
    c = annihilators(h.shape[0])
    return sum(h[i, j] * (c[i].conj().T @ c[j]) for i in range(h.shape[0]) for j in range(h.shape[0]))


def slater_ground_state(h: np.ndarray, particles: int) -> FockState:
    """
    Ground state of a quadratic Hamiltonian at fixed particle number.

    Args:
        h: Single-particle M x M Hermitian matrix
        particles: Fermion number, at most M

    Returns:
        FockState embedded in the full 2**M space
    """
    modes = np.asarray(h).shape[0]
    if not 0 <= particles <= modes:
        raise ValueError(f"cannot place {particles} fermions in {modes} modes")
    sector = number_sector(modes, particles)
    block = quadratic_hamiltonian(h)[np.ix_(sector, sector)]
    energies, vectors = linalg.eigh(block)
    vector = np.zeros(2**modes, dtype=complex)
    vector[sector] = vectors[:, 0]
    return FockState(modes=modes, particles=particles, vector=vector, energy=float(energies[0]))
