"""
Quasi-probability distributions of lattice states.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.space import DualBasisSpace, OperatorError, OperatorMatrix, _frozen
from ..core.weyl import (
    WeylSymbol,
    cf_array,
    ordering_phase,
    symbol_array,
    symbol_from_cf_array,
)
from ..utils.config import config
from ..utils.file_utils import (
    envelope_grid,
    grid_envelope,
    load_grid_csv,
    load_json,
    parse_timestamp,
    save_distribution_csv,
    save_json,
    save_symbol_csv,
)
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

KINDS = ("wigner", "husimi", "p_function", "custom_smoothed")


@dataclass(frozen=True, eq=False)
class QuasiDistribution:
    """Phase-space grid[p, q] of a state together with how it was smoothed."""

    space: DualBasisSpace
    grid: np.ndarray
    kind: str
    smoothing: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        grid = np.asarray(self.grid)
        if grid.shape != (self.space.n, self.space.n):
            raise ValueError(f"distribution grid must be {self.space.n}x{self.space.n}, got {grid.shape}")
        object.__setattr__(self, "grid", _frozen(grid))
        if self.smoothing is not None:
            object.__setattr__(self, "smoothing", _frozen(np.asarray(self.smoothing, dtype=complex)))

    def total(self) -> float:
        """(1/N) sum over the grid."""
        return float(np.real(self.grid.sum()) / self.space.n)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.grid)


@dataclass(frozen=True, eq=False)
class CoherentFrame:
    """Periodized Gaussian wavepackets, one per phase-space point; states[p, q] is a ket."""

    space: DualBasisSpace
    sigma: float
    fiducial: np.ndarray
    states: np.ndarray

    def state(self, p: int, q: int) -> np.ndarray:
        return self.states[self.space.check_index(p, "p"), self.space.check_index(q, "q")]

    def resolution(self) -> np.ndarray:
        """(1/N) sum of the frame projectors."""
        flat = self.states.reshape(-1, self.space.n)
        return flat.T @ flat.conj() / self.space.n

    def cf(self) -> np.ndarray:
        """Wigner characteristic grid of the fiducial projector."""
        return _projector_cf(self.space, self.fiducial)


def _projector_cf(space: DualBasisSpace, ket: np.ndarray) -> np.ndarray:
    return cf_array(space, symbol_array(space, np.outer(ket, ket.conj())))


def _require_density(state: OperatorMatrix) -> None:
    if state.tag != "density":
        raise OperatorError(f"expected a density-tagged operator, got tag {state.tag!r}")


def _real_grid(grid: np.ndarray, label: str) -> np.ndarray:
    imag = float(np.max(np.abs(grid.imag)))
    if imag > config.TOLERANCES["imag_symbol"]:
        raise ValueError(f"{label} grid has imaginary part {imag:.3e}")
    return grid.real.copy()


def periodized_gaussian(space: DualBasisSpace, sigma: float, center: float = 0.0, images: int = 3) -> np.ndarray:
    """Normalized ket proportional to sum_m exp(-(x - center - m N)^2 / (4 sigma^2))."""
    if sigma <= 0:
        raise ValueError(f"frame width must be positive, got sigma={sigma}")
    x = space.lattice.astype(float)
    shifts = np.arange(-images, images + 1)[:, None] * space.n
    ket = np.exp(-((x[None, :] - center - shifts) ** 2) / (4 * sigma**2)).sum(axis=0)
    return (ket / np.linalg.norm(ket)).astype(complex)


def make_frame(space: DualBasisSpace, sigma: Optional[float] = None) -> CoherentFrame:
    """
    Coherent frame with state(p, q) = D(p, h q) phi0 for the fiducial phi0 centered at 0.

    Args:
        space: Lattice
        sigma: Position-space width; defaults to sqrt(N / 4 pi)

    Returns:
        CoherentFrame with all N^2 states tabulated
    """
    sigma = config.default_frame_sigma(space.n) if sigma is None else float(sigma)
    n = space.n
    fiducial = periodized_gaussian(space, sigma)
    x = space.lattice
    states = np.empty((n, n, n), dtype=complex)
    for q in range(n):
        v = (space.inv2 * q) % n
        # D(p, v)|x> = w**(p (x + v)) |x + 2v>, and 2v = q mod N
        moved = np.roll(fiducial, q)
        source = np.mod(x - q, n)
        states[:, q, :] = space.phase(np.outer(space.lattice, source + v)) * moved[None, :]
    return CoherentFrame(space=space, sigma=sigma, fiducial=_frozen(fiducial), states=_frozen(states))


def gaussian_smoothing(space: DualBasisSpace, sigma: Optional[float] = None) -> np.ndarray:
    """
    Lattice Gaussian g(u, v) matching the frame of width sigma.

    g is the conjugated characteristic grid of the periodized fiducial, a
    theta-function sum that tends to
    (-1)**(u~ s~) exp(-s~^2 / (8 sigma^2) - 2 pi^2 sigma^2 u~^2 / N^2)
    (u~ the centered u, s~ the centered 2v mod N) as N grows. Smoothing a
    Wigner grid by g gives the frame Husimi grid exactly.
    """
    sigma = config.default_frame_sigma(space.n) if sigma is None else float(sigma)
    return _projector_cf(space, periodized_gaussian(space, sigma)).conj()


def wigner_of(state: OperatorMatrix) -> QuasiDistribution:
    """Wigner function, the real Weyl symbol of a density operator."""
    _require_density(state)
    grid = symbol_array(state.space, state.q_entries)
    return QuasiDistribution(state.space, _real_grid(grid, "wigner"), "wigner")


def smoothed_distribution(state: OperatorMatrix, g: np.ndarray, kind: str = "custom_smoothed") -> QuasiDistribution:
    """
    Smooth the Wigner characteristic function by g and transform back.

    Args:
        state: Density operator
        g: Grid over (u, v)
        kind: Label for the result

    Returns:
        QuasiDistribution, real when the result is real to tolerance
    """
    _require_density(state)
    space = state.space
    g = np.asarray(g, dtype=complex)
    if g.shape != (space.n, space.n):
        raise ValueError(f"smoothing grid must be {space.n}x{space.n}, got {g.shape}")
    cf = cf_array(space, symbol_array(space, state.q_entries))
    grid = symbol_from_cf_array(space, cf * g)
    if np.max(np.abs(grid.imag)) <= config.TOLERANCES["imag_symbol"]:
        grid = grid.real
    return QuasiDistribution(space, grid, kind, smoothing=g)


def ordered_distribution(state: OperatorMatrix, ordering: str) -> QuasiDistribution:
    """Ordering-phase smoothing: normal gives the lattice P-function, antinormal a custom kind."""
    kinds = {"wigner": "wigner", "symmetric": "wigner", "normal": "p_function", "antinormal": "custom_smoothed"}
    if ordering not in kinds:
        raise ValueError(f"ordering must be one of {tuple(kinds)}, got {ordering!r}")
    return smoothed_distribution(state, ordering_phase(state.space, ordering), kinds[ordering])


def unsmooth(dist: QuasiDistribution) -> QuasiDistribution:
    """Undo a smoothing whose grid has no zeros; recovers the Wigner function."""
    if dist.smoothing is None:
        return dist
    if np.min(np.abs(dist.smoothing)) < 1e-12:
        raise ValueError("smoothing grid has zeros and cannot be inverted")
    space = dist.space
    cf = cf_array(space, np.asarray(dist.grid, dtype=complex)) / dist.smoothing
    grid = symbol_from_cf_array(space, cf)
    return QuasiDistribution(space, _real_grid(grid, "wigner"), "wigner")


def husimi_of(state: OperatorMatrix, frame: CoherentFrame) -> QuasiDistribution:
    """Husimi grid[p, q] = <frame(p, q)|state|frame(p, q)>."""
    _require_density(state)
    if frame.space.n != state.space.n:
        raise ValueError(f"frame lives on N={frame.space.n}, state on N={state.space.n}")
    grid = np.einsum("pqx,xy,pqy->pq", frame.states.conj(), state.q_entries, frame.states)
    return QuasiDistribution(
        state.space, _real_grid(grid, "husimi"), "husimi", smoothing=frame.cf().conj()
    )


def wavepacket_state(space: DualBasisSpace, center: Tuple[float, float], width: Optional[float] = None) -> OperatorMatrix:
    """Pure Gaussian wavepacket centered at (p0, q0); fractional centers allowed."""
    p0, q0 = center
    width = config.default_frame_sigma(space.n) if width is None else float(width)
    envelope = periodized_gaussian(space, width, center=float(q0))
    # momentum kick exp(2 pi i p0 (x - q0) / N) on the centered displacement
    offset = space.centered(space.lattice - int(round(q0))) + int(round(q0)) - q0
    ket = envelope * np.exp(2j * np.pi * p0 * offset / space.n)
    return OperatorMatrix.pure(space, ket)


def marginals(dist: QuasiDistribution) -> Tuple[np.ndarray, np.ndarray]:
    """(position populations over q, momentum populations over p) of a Wigner grid."""
    if dist.kind != "wigner":
        raise ValueError(f"marginals need a wigner distribution, got {dist.kind!r}")
    n = dist.space.n
    grid = np.real(dist.grid)
    return grid.sum(axis=0) / n, grid.sum(axis=1) / n


def purity(dist: QuasiDistribution) -> float:
    """(1/N) sum grid^2, equal to Tr(rho^2) for a Wigner grid."""
    return float(np.real(np.sum(dist.grid * np.conj(dist.grid))) / dist.space.n)


def circular_mean(space: DualBasisSpace, weights: np.ndarray) -> float:
    """Mean position on the ring Z_N, in [0, N)."""
    angle = np.angle(np.sum(weights * np.exp(2j * np.pi * space.lattice / space.n)))
    return float(np.mod(angle * space.n / (2 * np.pi), space.n))


def centroid(dist: QuasiDistribution) -> Tuple[float, float]:
    """(p, q) centroid from the marginals using circular means."""
    q_marginal, p_marginal = marginals(dist)
    return circular_mean(dist.space, p_marginal), circular_mean(dist.space, q_marginal)


def save_distribution(dist: QuasiDistribution, filepath) -> str:
    if dist.is_real:
        return save_distribution_csv(dist.grid, filepath)
    return save_symbol_csv(dist.grid, filepath)


def load_distribution(space: DualBasisSpace, filepath, kind: str = "wigner") -> QuasiDistribution:
    grid = load_grid_csv(filepath)
    if grid.shape != (space.n, space.n):
        raise ValueError(f"{filepath} holds a {grid.shape[0]}x{grid.shape[1]} grid, expected N={space.n}")
    return QuasiDistribution(space, grid, kind)


def save_distribution_json(dist: QuasiDistribution, filepath, timestamp: Optional[str] = None) -> str:
    envelope = grid_envelope(dist.grid, dist.kind, dist.total(), timestamp=timestamp)
    return save_json(envelope, filepath)


def load_distribution_json(space: DualBasisSpace, filepath) -> Tuple[QuasiDistribution, dict]:
    """Distribution plus envelope metadata; the timestamp comes back as a datetime."""
    envelope = load_json(filepath)
    if envelope["N"] != space.n:
        raise ValueError(f"{filepath} holds N={envelope['N']}, expected N={space.n}")
    metadata = {k: v for k, v in envelope.items() if k not in ("grid", "imag")}
    metadata["timestamp"] = parse_timestamp(envelope["timestamp"])
    return QuasiDistribution(space, envelope_grid(envelope), envelope["kind"]), metadata


def symbol_distribution(sym: WeylSymbol, kind: str = "wigner") -> QuasiDistribution:
    """Wrap a Weyl symbol as a distribution, dropping a negligible imaginary part."""
    grid = sym.grid
    if sym.max_imag() <= config.TOLERANCES["imag_symbol"]:
        grid = grid.real
    return QuasiDistribution(sym.space, grid, kind)
