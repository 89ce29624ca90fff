"""
Lattice Weyl transform.

Phase-point operators Delta(p, q), the operator <-> symbol maps and the
characteristic functions with their three orderings. Symbols are indexed
grid[p, q], characteristic functions grid[u, v].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..utils.config import config
from .space import (
    ORDERING_EXPONENT,
    DualBasisSpace,
    OperatorMatrix,
    _frozen,
    displacement_operator,
)

CF_ORDERINGS = ("wigner", "normal", "antinormal")

_CF_EXPONENT = {
    "wigner": ORDERING_EXPONENT["symmetric"],
    "normal": ORDERING_EXPONENT["normal"],
    "antinormal": ORDERING_EXPONENT["antinormal"],
}


class OrderingError(ValueError):
    """Characteristic function carries the wrong ordering for the requested operation."""


def _check_ordering(ordering: str) -> str:
    if ordering == "symmetric":
        return "wigner"
    if ordering not in CF_ORDERINGS:
        raise OrderingError(f"ordering must be one of {CF_ORDERINGS}, got {ordering!r}")
    return ordering


def _square(space: DualBasisSpace, grid, label: str) -> np.ndarray:
    grid = np.asarray(grid, dtype=complex)
    if grid.shape != (space.n, space.n):
        raise ValueError(f"{label} grid must be {space.n}x{space.n}, got shape {grid.shape}")
    return grid


@dataclass(frozen=True, eq=False)
class WeylSymbol:
    """Function A(p, q) on the N x N phase-space lattice."""

    space: DualBasisSpace
    grid: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen(_square(self.space, self.grid, "symbol")))

    def total(self) -> complex:
        """(1/N) sum over the grid, the trace of the underlying operator."""
        return complex(self.grid.sum() / self.space.n)

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.grid.imag)))

    def real(self, tol: float = None) -> np.ndarray:
        """Real part after checking the imaginary part is negligible."""
        tol = config.TOLERANCES["imag_symbol"] if tol is None else tol
        if self.max_imag() > tol:
            raise ValueError(f"symbol is not real (max |imag| {self.max_imag():.3e})")
        return self.grid.real.copy()

    def __add__(self, other: "WeylSymbol") -> "WeylSymbol":
        return WeylSymbol(self.space, self.grid + other.grid)

    def __sub__(self, other: "WeylSymbol") -> "WeylSymbol":
        return WeylSymbol(self.space, self.grid - other.grid)

    def __mul__(self, scalar) -> "WeylSymbol":
        return WeylSymbol(self.space, self.grid * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class CharacteristicFn:
    """Grid of Tr(A D(u, v)) for one ordering of the displacement operator."""

    space: DualBasisSpace
    grid: np.ndarray
    ordering: str = "wigner"

    def __post_init__(self):
        object.__setattr__(self, "ordering", _check_ordering(self.ordering))
        object.__setattr__(self, "grid", _frozen(_square(self.space, self.grid, "characteristic")))


def ordering_phase(space: DualBasisSpace, ordering: str) -> np.ndarray:
    """Grid w**(e u v) taking the wigner characteristic function to `ordering`."""
    exponent = _CF_EXPONENT[_check_ordering(ordering)]
    u = space.lattice[:, None]
    v = space.lattice[None, :]
    return space.phase(exponent * u * v)


def phase_point_operator(space: DualBasisSpace, p: int, q: int) -> OperatorMatrix:
    """Delta(p, q) = sum_v w**(2 p v) |q + v><q - v|."""
    p = space.check_index(p, "p")
    q = space.check_index(q, "q")
    v = space.lattice
    matrix = np.zeros((space.n, space.n), dtype=complex)
    matrix[np.mod(q + v, space.n), np.mod(q - v, space.n)] = space.phase(2 * p * v)
    return OperatorMatrix(space, matrix, tag="hermitian")


def phase_point_operator_p_side(space: DualBasisSpace, p: int, q: int) -> OperatorMatrix:
    """Delta(p, q) = sum_u w**(-2 u q) |p + u><p - u|, assembled from momentum kets."""
    p = space.check_index(p, "p")
    q = space.check_index(q, "q")
    matrix = np.zeros((space.n, space.n), dtype=complex)
    for u in range(space.n):
        ket = space.momentum_state((p + u) % space.n)
        bra = space.momentum_state((p - u) % space.n).conj()
        matrix += space.phase(-2 * u * q) * np.outer(ket, bra)
    return OperatorMatrix(space, matrix, tag="hermitian")


def symbol_array(space: DualBasisSpace, matrix: np.ndarray) -> np.ndarray:
    """
    Weyl symbol grid of a position-basis matrix.

    For each q the anti-diagonal a_q[v] = A[q - v, q + v] is transformed in v,
    and frequency 2p is read off for row p.
    """
    n = space.n
    v = space.lattice[:, None]
    q = space.lattice[None, :]
    anti = matrix[np.mod(q - v, n), np.mod(q + v, n)]
    spectrum = n * np.fft.ifft(anti, axis=0)
    return spectrum[np.mod(2 * space.lattice, n), :]


def operator_array(space: DualBasisSpace, grid: np.ndarray) -> np.ndarray:
    """Position-basis matrix (1/N) sum_{p,q} grid[p, q] Delta(p, q)."""
    n = space.n
    spectrum = n * np.fft.ifft(grid, axis=0)
    v = space.lattice[:, None]
    q = space.lattice[None, :]
    matrix = np.zeros((n, n), dtype=complex)
    matrix[np.mod(q + v, n), np.mod(q - v, n)] = spectrum[np.mod(2 * v, n), q] / n
    return matrix


def cf_array(space: DualBasisSpace, grid: np.ndarray) -> np.ndarray:
    """Wigner characteristic grid (1/N) sum_{p,q} w**(q u - 2 p v) grid[p, q]."""
    n = space.n
    by_u = n * np.fft.ifft(grid, axis=1)  # [p, u]
    by_k = np.fft.fft(by_u, axis=0)  # [k, u] with k paired to 2v
    return by_k[np.mod(2 * space.lattice, n), :].T / n


def symbol_from_cf_array(space: DualBasisSpace, grid: np.ndarray) -> np.ndarray:
    """Symbol grid (1/N) sum_{u,v} w**(2 p v - q u) grid[u, v]."""
    n = space.n
    by_k = n * np.fft.ifft(grid, axis=1)  # [u, k] with k paired to 2p
    by_p = by_k[:, np.mod(2 * space.lattice, n)]
    return np.fft.fft(by_p, axis=0).T / n


def weyl_symbol(op: OperatorMatrix) -> WeylSymbol:
    """
    Weyl symbol grid[p, q] = Tr(op Delta(p, q)).

    Args:
        op: Operator in either basis

    Returns:
        WeylSymbol, real when op is Hermitian
    """
    return WeylSymbol(op.space, symbol_array(op.space, op.q_entries))


def weyl_symbol_slow(op: OperatorMatrix) -> WeylSymbol:
    """Explicit Tr(op Delta) for every lattice point."""
    space = op.space
    entries = op.q_entries
    grid = np.zeros((space.n, space.n), dtype=complex)
    for p in range(space.n):
        for q in range(space.n):
            delta = phase_point_operator(space, p, q).entries
            grid[p, q] = np.sum(entries * delta.T)
    return WeylSymbol(space, grid)


def weyl_symbol_p_side(op: OperatorMatrix) -> WeylSymbol:
    """Symbol from momentum matrix elements: sum_u w**(2 u q) <p + u|A|p - u>."""
    space = op.space
    n = space.n
    momentum = op.in_basis("p").entries
    u = space.lattice[:, None]
    p = space.lattice[None, :]
    anti = momentum[np.mod(p + u, n), np.mod(p - u, n)]  # [u, p]
    spectrum = n * np.fft.ifft(anti, axis=0)  # [k, p] with k paired to 2q
    return WeylSymbol(space, spectrum[np.mod(2 * space.lattice, n), :].T)


def inverse_weyl(sym: WeylSymbol, tag: str = "general") -> OperatorMatrix:
    """Operator (1/N) sum grid[p, q] Delta(p, q), the exact inverse of weyl_symbol."""
    return OperatorMatrix(sym.space, operator_array(sym.space, sym.grid), tag=tag)


def characteristic_fn(op: OperatorMatrix, ordering: str = "wigner") -> CharacteristicFn:
    """Characteristic function grid[u, v] = Tr(op D(u, v)) in the requested ordering."""
    ordering = _check_ordering(ordering)
    space = op.space
    grid = cf_array(space, symbol_array(space, op.q_entries))
    return CharacteristicFn(space, grid * ordering_phase(space, ordering), ordering)


def characteristic_fn_slow(op: OperatorMatrix, ordering: str = "wigner") -> CharacteristicFn:
    """Explicit traces against displacement matrices."""
    ordering = _check_ordering(ordering)
    displacement_ordering = "symmetric" if ordering == "wigner" else ordering
    space = op.space
    entries = op.q_entries
    grid = np.zeros((space.n, space.n), dtype=complex)
    for u in range(space.n):
        for v in range(space.n):
            shift = displacement_operator(space, u, v, displacement_ordering).entries
            grid[u, v] = np.sum(entries * shift.T)
    return CharacteristicFn(space, grid, ordering)


def characteristic_from_symbol(sym: WeylSymbol) -> CharacteristicFn:
    return CharacteristicFn(sym.space, cf_array(sym.space, sym.grid), "wigner")


def symbol_from_characteristic(cf: CharacteristicFn) -> WeylSymbol:
    if cf.ordering != "wigner":
        raise OrderingError(
            f"symbol_from_characteristic needs a wigner-ordered function, got {cf.ordering!r}; "
            "convert_ordering first"
        )
    return WeylSymbol(cf.space, symbol_from_cf_array(cf.space, cf.grid))


def convert_ordering(cf: CharacteristicFn, ordering: str) -> CharacteristicFn:
    """Exact phase conversion between orderings; no information is lost."""
    ordering = _check_ordering(ordering)
    exponent = _CF_EXPONENT[ordering] - _CF_EXPONENT[cf.ordering]
    u = cf.space.lattice[:, None]
    v = cf.space.lattice[None, :]
    return CharacteristicFn(cf.space, cf.grid * cf.space.phase(exponent * u * v), ordering)


def _matrices(a: WeylSymbol, b: WeylSymbol):
    if a.space is not b.space and a.space.n != b.space.n:
        raise ValueError(f"symbols live on different lattices (N={a.space.n} vs N={b.space.n})")
    return operator_array(a.space, a.grid), operator_array(a.space, b.grid)


def star_product(a: WeylSymbol, b: WeylSymbol) -> WeylSymbol:
    """Symbol of the operator product AB."""
    left, right = _matrices(a, b)
    return WeylSymbol(a.space, symbol_array(a.space, left @ right))


def star_product_direct(a: WeylSymbol, b: WeylSymbol) -> WeylSymbol:
    """
    Twisted convolution (1/N^2) sum A(z1) B(z2) w**(2 Phi) evaluated point by point.

    Phi = (q - q1)(p - p2) - (p - p1)(q - q2). O(N^6); small lattices only.
    """
    space = a.space
    n = space.n
    lat = space.lattice
    p1, q1 = lat[:, None], lat[None, :]
    grid = np.zeros((n, n), dtype=complex)
    for p in range(n):
        for q in range(n):
            # phase[p1, q1, p2, q2]
            first = (q - q1)[:, :, None, None] * (p - lat)[None, None, :, None]
            second = (p - p1)[:, :, None, None] * (q - lat)[None, None, None, :]
            phase = space.phase(2 * (first - second))
            grid[p, q] = np.einsum("ab,abcd,cd->", a.grid, phase, b.grid) / n**2
    return WeylSymbol(space, grid)


def commutator_symbol(a: WeylSymbol, b: WeylSymbol) -> WeylSymbol:
    """Symbol of -i[A, B], the lattice sine bracket."""
    left, right = _matrices(a, b)
    return WeylSymbol(a.space, symbol_array(a.space, -1j * (left @ right - right @ left)))


def anticommutator_symbol(a: WeylSymbol, b: WeylSymbol) -> WeylSymbol:
    """Symbol of (AB + BA) / 2, the lattice cosine bracket."""
    left, right = _matrices(a, b)
    return WeylSymbol(a.space, symbol_array(a.space, 0.5 * (left @ right + right @ left)))
