"""
Dual position/momentum bases on the finite lattice Z_N.

The position kets |q> are unit vectors; the momentum kets satisfy
<q|p> = w**(p q) / sqrt(N) with w = exp(2 pi i / N). Every phase used by the
toolkit is looked up from the table of N-th roots of unity with an exponent
reduced mod N, so lattice identities hold to machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..utils.config import config

BASES = ("q", "p")
TAGS = ("general", "hermitian", "density")
ORDERINGS = ("symmetric", "normal", "antinormal")

# exponent of w**(u v) separating each ordering from the symmetric one
ORDERING_EXPONENT = {"symmetric": 0, "normal": -1, "antinormal": 1}


class LatticeError(ValueError):
    """Invalid lattice size or lattice index."""


class OperatorError(ValueError):
    """Operator fails a shape, Hermiticity or density requirement."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DualBasisSpace:
    """Finite lattice with its position basis, momentum basis and overlap kernel."""

    n: int
    inv2: int
    lattice: np.ndarray
    roots: np.ndarray
    kernel: np.ndarray
    overlap: np.ndarray

    @property
    def dimension(self) -> int:
        return self.n

    def phase(self, exponent) -> np.ndarray:
        """w**exponent for integer exponent arrays, reduced mod N."""
        return self.roots[np.mod(exponent, self.n)]

    def check_index(self, value: int, label: str) -> int:
        if int(value) != value or not 0 <= value < self.n:
            raise LatticeError(f"{label}={value} is outside the lattice 0..{self.n - 1}")
        return int(value)

    def centered(self, values) -> np.ndarray:
        """Representatives of lattice integers in (-N/2, N/2)."""
        values = np.mod(values, self.n)
        return np.where(values > self.n // 2, values - self.n, values)

    def position_state(self, q: int) -> np.ndarray:
        q = self.check_index(q, "q")
        ket = np.zeros(self.n, dtype=complex)
        ket[q] = 1.0
        return ket

    def momentum_state(self, p: int) -> np.ndarray:
        """|p> in position components, w**(p x) / sqrt(N)."""
        p = self.check_index(p, "p")
        return self.phase(p * self.lattice) / np.sqrt(self.n)

    def to_momentum(self, matrix: np.ndarray) -> np.ndarray:
        """Re-express position-basis entries <x|A|y> as <p|A|p'>."""
        return self.overlap @ matrix @ self.overlap.conj().T

    def from_momentum(self, matrix: np.ndarray) -> np.ndarray:
        return self.overlap.conj().T @ matrix @ self.overlap

    def momentum_function(self, values: np.ndarray) -> np.ndarray:
        """f(P) in the position basis for f given on the momentum lattice."""
        return self.from_momentum(np.diag(np.asarray(values, dtype=complex)))

    def shift(self, steps: int) -> np.ndarray:
        """Cyclic shift |x> -> |x + steps>."""
        matrix = np.zeros((self.n, self.n), dtype=complex)
        matrix[np.mod(self.lattice + steps, self.n), self.lattice] = 1.0
        return matrix

    def position_phase(self, u: int) -> np.ndarray:
        """diag(w**(u x)), the lattice form of exp(2i u Q)."""
        return np.diag(self.phase(u * self.lattice))


def make_space(n: int) -> DualBasisSpace:
    """
    Build the dual-basis lattice of odd size N.

    Args:
        n: Lattice size; odd and at least 3 so that 2 is invertible mod N

    Returns:
        DualBasisSpace with the overlap kernel tabulated
    """
    if isinstance(n, bool) or int(n) != n:
        raise LatticeError(f"N must be an odd integer >= 3, got {n!r}")
    n = int(n)
    if n < 3 or n % 2 == 0:
        raise LatticeError(f"N must be odd (and >= 3) so that 2 is invertible mod N, got N={n}")

    lattice = np.arange(n)
    roots = np.exp(2j * np.pi * lattice / n)
    kernel = roots[np.mod(-np.outer(lattice, lattice), n)]
    return DualBasisSpace(
        n=n,
        inv2=(n + 1) // 2,
        lattice=_frozen(lattice),
        roots=_frozen(roots),
        kernel=_frozen(kernel),
        overlap=_frozen(kernel / np.sqrt(n)),
    )


def dual_overlap(space: DualBasisSpace, p: int, q: int) -> complex:
    """<p||q> = exp(-2 pi i p q / N); the swapped overlap <q||p> is its conjugate."""
    p = space.check_index(p, "p")
    q = space.check_index(q, "q")
    return complex(space.kernel[p, q])


def mixed_completeness(space: DualBasisSpace) -> np.ndarray:
    """(1/N) sum_{p,q} w**(p q) |q><p|| with the unnormalized dual bra <p|| = sqrt(N) <p|."""
    dual_bras = space.kernel  # row p holds <p|| in position components
    weights = space.kernel.conj()  # weights[p, q] = w**(p q)
    total = np.zeros((space.n, space.n), dtype=complex)
    for q in range(space.n):
        total[q, :] = weights[:, q] @ dual_bras
    return total / space.n


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """An N x N operator on a DualBasisSpace, stored in the position or momentum basis."""

    space: DualBasisSpace
    entries: np.ndarray
    basis: str = "q"
    tag: str = "general"

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        n = self.space.n
        if entries.shape != (n, n):
            raise OperatorError(f"operator must be {n}x{n}, got shape {entries.shape}")
        if self.basis not in BASES:
            raise OperatorError(f"basis must be one of {BASES}, got {self.basis!r}")
        if self.tag not in TAGS:
            raise OperatorError(f"tag must be one of {TAGS}, got {self.tag!r}")
        if self.tag in ("hermitian", "density"):
            deviation = float(np.max(np.abs(entries - entries.conj().T)))
            if deviation > config.TOLERANCES["hermitian"]:
                raise OperatorError(f"{self.tag} operator is not Hermitian (max deviation {deviation:.3e})")
        if self.tag == "density":
            tol = config.TOLERANCES["density_eigen"]
            trace = complex(np.trace(entries))
            if abs(trace - 1.0) > tol:
                raise OperatorError(f"density operator must have trace 1, got {trace:.12g}")
            lowest = float(np.linalg.eigvalsh((entries + entries.conj().T) / 2).min())
            if lowest < -tol:
                raise OperatorError(f"density operator has negative eigenvalue {lowest:.3e}")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def q_entries(self) -> np.ndarray:
        """Entries in the position basis."""
        if self.basis == "q":
            return self.entries
        return self.space.from_momentum(self.entries)

    def in_basis(self, basis: str) -> "OperatorMatrix":
        if basis not in BASES:
            raise OperatorError(f"basis must be one of {BASES}, got {basis!r}")
        if basis == self.basis:
            return self
        if basis == "p":
            entries = self.space.to_momentum(self.entries)
        else:
            entries = self.space.from_momentum(self.entries)
        return OperatorMatrix(self.space, entries, basis=basis, tag=self._relaxed_tag())

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def is_hermitian(self, tol: Optional[float] = None) -> bool:
        tol = config.TOLERANCES["hermitian"] if tol is None else tol
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tol)

    def _relaxed_tag(self) -> str:
        # a basis change keeps Hermiticity and the spectrum up to rounding
        return "hermitian" if self.tag == "density" else self.tag

    @classmethod
    def identity(cls, space: DualBasisSpace) -> "OperatorMatrix":
        return cls(space, np.eye(space.n), tag="hermitian")

    @classmethod
    def pure(cls, space: DualBasisSpace, ket: np.ndarray) -> "OperatorMatrix":
        """Density operator |psi><psi| of a normalized copy of ket."""
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(space, np.outer(ket, ket.conj()), tag="density")


def to_basis(op: OperatorMatrix, basis: str) -> OperatorMatrix:
    return op.in_basis(basis)


def canonical_operators(space: DualBasisSpace) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """Q diagonal in the position basis and P diagonal in the momentum basis, both returned in the position basis."""
    position = OperatorMatrix(space, np.diag(space.lattice.astype(complex)), tag="hermitian")
    momentum = OperatorMatrix(space, space.momentum_function(space.lattice), tag="hermitian")
    return position, momentum


@dataclass(frozen=True)
class Displacement:
    """Lattice displacement exp{-2i[P v - Q u]} and its two ordered factorizations."""

    u: int
    v: int
    ordering: str = "symmetric"

    def __post_init__(self):
        if self.ordering not in ORDERINGS:
            raise LatticeError(f"ordering must be one of {ORDERINGS}, got {self.ordering!r}")

    def phase(self, space: DualBasisSpace) -> complex:
        """Scalar relating this ordering to the symmetric operator."""
        return complex(space.phase(ORDERING_EXPONENT[self.ordering] * self.u * self.v))

    def matrix(self, space: DualBasisSpace) -> np.ndarray:
        """
        Symmetric: D|x> = w**(u (x + v)) |x + 2v>.
        Normal is the shift applied after the position phase, antinormal before it.
        """
        x = space.lattice
        matrix = np.zeros((space.n, space.n), dtype=complex)
        matrix[np.mod(x + 2 * self.v, space.n), x] = space.phase(self.u * (x + self.v))
        return matrix * self.phase(space)


def displacement_operator(space: DualBasisSpace, u: int, v: int, ordering: str = "symmetric") -> OperatorMatrix:
    """Displacement operator for lattice integers (u, v); unitary in every ordering."""
    return OperatorMatrix(space, Displacement(int(u), int(v), ordering).matrix(space))


def random_hermitian(space: DualBasisSpace, rng: np.random.Generator, scale: float = 1.0) -> OperatorMatrix:
    """Hermitian operator with Gaussian entries, spectrum of order `scale`."""
    n = space.n
    raw = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return OperatorMatrix(space, scale * (raw + raw.conj().T) / (2.0 * np.sqrt(n)), tag="hermitian")


def random_pure_state(space: DualBasisSpace, rng: np.random.Generator) -> OperatorMatrix:
    ket = rng.normal(size=space.n) + 1j * rng.normal(size=space.n)
    return OperatorMatrix.pure(space, ket)


def random_density(space: DualBasisSpace, rng: np.random.Generator, rank: Optional[int] = None) -> OperatorMatrix:
    """Mixed state A A^dagger / Tr with A an N x rank Gaussian matrix."""
    rank = space.n if rank is None else rank
    raw = rng.normal(size=(space.n, rank)) + 1j * rng.normal(size=(space.n, rank))
    rho = raw @ raw.conj().T
    rho = (rho + rho.conj().T) / 2
    return OperatorMatrix(space, rho / np.trace(rho).real, tag="density")


def basis_state(space: DualBasisSpace, q0: int) -> OperatorMatrix:
    return OperatorMatrix.pure(space, space.position_state(q0))


def momentum_basis_state(space: DualBasisSpace, p0: int) -> OperatorMatrix:
    return OperatorMatrix.pure(space, space.momentum_state(p0))


def mixed_state(space: DualBasisSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.eye(space.n) / space.n, tag="density")
