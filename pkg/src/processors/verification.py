"""
Invariant suite behind the `verify` command.

Every check returns its maximum error; a row passes when the error is within
the tolerance. Sizes are kept at desk scale.
"""
from __future__ import annotations

from typing import Callable, Iterable, List, Tuple

import numpy as np
import pandas as pd

from ..core.space import (
    DualBasisSpace,
    OperatorMatrix,
    displacement_operator,
    make_space,
    mixed_completeness,
    random_density,
    random_hermitian,
    random_pure_state,
)
from ..core.weyl import (
    WeylSymbol,
    characteristic_fn,
    characteristic_from_symbol,
    inverse_weyl,
    phase_point_operator,
    phase_point_operator_p_side,
    symbol_from_characteristic,
    weyl_symbol,
    weyl_symbol_p_side,
    weyl_symbol_slow,
)
from ..utils.logging_utils import get_logger
from .distributions import gaussian_smoothing, husimi_of, make_frame, marginals, purity, smoothed_distribution, wigner_of
from .dynamics import PropagatorConfig, build_kernel, evolve, moyal_rhs, propagate_symbol
from .fock import slater_ground_state
from .hamiltonians import from_matrix
from .thirdq import (
    CorrelationState,
    assemble_one_body,
    assemble_two_body,
    ballistic_step_corr,
    contact_interaction,
    klimontovich_average,
    one_body_expectation,
    wick_expectation,
)
from .transport import EnergyResolvedSymbols, TransportInputs, TransportStepper

logger = get_logger(__name__)

Check = Tuple[str, Callable[[DualBasisSpace, np.random.Generator], float], float]


def _max(values: Iterable[float]) -> float:
    return float(max(values))


def _completeness(space, rng):
    q_sum = sum(np.outer(space.position_state(q), space.position_state(q).conj()) for q in range(space.n))
    p_sum = sum(np.outer(space.momentum_state(p), space.momentum_state(p).conj()) for p in range(space.n))
    eye = np.eye(space.n)
    return _max([np.abs(q_sum - eye).max(), np.abs(p_sum - eye).max(), np.abs(mixed_completeness(space) - eye).max()])


def _basis_round_trip(space, rng):
    op = OperatorMatrix(space, rng.normal(size=(space.n, space.n)) + 1j * rng.normal(size=(space.n, space.n)))
    return float(np.abs(op.in_basis("p").in_basis("q").entries - op.entries).max())


def _displacements(space, rng):
    errors = []
    for _ in range(5):
        u1, v1, u2, v2 = rng.integers(0, space.n, size=4)
        d1 = displacement_operator(space, u1, v1).entries
        d2 = displacement_operator(space, u2, v2).entries
        product = displacement_operator(space, u1 + u2, v1 + v2).entries * space.phase(u1 * v2 - u2 * v1)
        errors.append(np.abs(d1 @ d2 - product).max())
        errors.append(np.abs(d1 @ d1.conj().T - np.eye(space.n)).max())
        normal = displacement_operator(space, u1, v1, "normal").entries
        errors.append(np.abs(normal - space.phase(-u1 * v1) * d1).max())
    return _max(errors)


def _phase_point_structure(space, rng):
    deltas = [[phase_point_operator(space, p, q).entries for q in range(space.n)] for p in range(space.n)]
    errors = [abs(np.trace(d) - 1) for row in deltas for d in row]
    total = sum(d for row in deltas for d in row) / space.n
    errors.append(np.abs(total - np.eye(space.n)).max())
    flat = np.array([d.ravel() for row in deltas for d in row])
    gram = flat @ flat.T.conj()  # Tr(D_a D_b^dagger) = Tr(D_a D_b)
    errors.append(np.abs(gram - space.n * np.eye(space.n**2)).max())
    for p in range(space.n):
        for q in range(space.n):
            errors.append(np.abs(phase_point_operator_p_side(space, p, q).entries - deltas[p][q]).max())
    return _max(errors)


def _weyl_paths(space, rng):
    op = OperatorMatrix(space, rng.normal(size=(space.n, space.n)) + 1j * rng.normal(size=(space.n, space.n)))
    fast = weyl_symbol(op)
    errors = [
        np.abs(inverse_weyl(fast).entries - op.entries).max(),
        np.abs(weyl_symbol_slow(op).grid - fast.grid).max(),
        np.abs(weyl_symbol_p_side(op).grid - fast.grid).max(),
        np.abs(characteristic_fn(op).grid[0, 0] - op.trace()),
    ]
    cf = characteristic_from_symbol(fast)
    errors.append(np.abs(symbol_from_characteristic(cf).grid - fast.grid).max())
    return _max(errors)


def _traciality(space, rng):
    errors = []
    for _ in range(10):
        a = random_hermitian(space, rng)
        b = random_hermitian(space, rng)
        exact = np.trace(a.entries @ b.entries)
        paired = np.sum(weyl_symbol(a).grid * weyl_symbol(b).grid) / space.n
        errors.append(abs(paired - exact) / max(1.0, abs(exact)))
    return _max(errors)


def _wigner_readouts(space, rng):
    rho = random_density(space, rng)
    dist = wigner_of(rho)
    q_marginal, p_marginal = marginals(dist)
    errors = [
        abs(dist.total() - 1),
        np.abs(q_marginal - np.diag(rho.entries).real).max(),
        np.abs(p_marginal - np.diag(rho.in_basis("p").entries).real).max(),
        abs(purity(dist) - np.trace(rho.entries @ rho.entries).real),
    ]
    return _max(errors)


def _husimi_positivity(space, rng):
    frame = make_frame(space)
    lowest = min(husimi_of(random_pure_state(space, rng), frame).grid.min() for _ in range(10))
    # error measured as the depth below zero
    return max(0.0, -float(lowest))


def _husimi_smoothing(space, rng):
    rho = random_density(space, rng)
    frame = make_frame(space)
    smoothed = smoothed_distribution(rho, gaussian_smoothing(space, frame.sigma))
    return float(np.abs(np.real(smoothed.grid) - husimi_of(rho, frame).grid).max())


def _kernel_equivalence(space, rng):
    h = random_hermitian(space, rng)
    kernel = build_kernel(h)
    errors = []
    for _ in range(5):
        f = weyl_symbol(random_hermitian(space, rng))
        errors.append(np.abs(kernel.apply(f) - moyal_rhs(h, f).grid).max())
    return _max(errors)


def _engine_equivalence(space, rng):
    h = from_matrix(random_hermitian(space, rng))
    rho = random_density(space, rng)
    finals = {}
    for engine in ("oracle", "spectral_moyal", "kernel_quadrature"):
        cfg = PropagatorConfig(engine=engine, dt=1e-2, steps=50, stride=50)
        finals[engine] = evolve(rho, h, cfg).final.grid
    return _max(
        np.abs(finals[a] - finals["oracle"]).max() for a in ("spectral_moyal", "kernel_quadrature")
    )


def _one_body(space, rng):
    a = OperatorMatrix(space, rng.normal(size=(space.n, space.n)) + 1j * rng.normal(size=(space.n, space.n)))
    g = random_density(space, rng)
    corr = CorrelationState(space, g.entries)
    table = assemble_one_body(a)
    return abs(one_body_expectation(table, corr) - np.trace(a.entries @ g.entries))


def _wick_vs_fock(space, rng):
    modes = 3
    h = rng.normal(size=(modes, modes)) + 1j * rng.normal(size=(modes, modes))
    h = (h + h.conj().T) / 2
    state = slater_ground_state(h, particles=2)
    table = assemble_two_body(contact_interaction(modes, 1.7))
    return abs(wick_expectation(table, state.correlation(), "fermion") - state.two_body_expectation(table))


def _unification(space, rng):
    h = random_hermitian(space, rng)
    g = random_density(space, rng).entries * 0.5
    corr = CorrelationState(space, g)
    cfg = PropagatorConfig(engine="spectral_moyal", dt=1e-2, steps=20, stride=10)
    trajectory = propagate_symbol(WeylSymbol(space, klimontovich_average(corr).grid), h, cfg)
    errors = []
    for snapshot in trajectory.snapshots:
        stepped = ballistic_step_corr(corr, h, snapshot.time)
        errors.append(np.abs(klimontovich_average(stepped).grid - snapshot.grid).max())
    return _max(errors)


def _dissipative_closed_form(space, rng):
    s, a, gamma, f0, dt, steps = 0.3, 0.8, 1.0, 0.1, 0.01, 500
    inputs = TransportInputs(space, sigma_less=s, gamma=gamma, spectral=a)
    f = EnergyResolvedSymbols(space, [0.0], np.full((1, space.n, space.n), f0))
    stepper = TransportStepper(inputs, max_workers=1)
    for _ in range(steps):
        f = stepper.step(f, dt)
    t = dt * steps
    expected = s * a / gamma + (f0 - s * a / gamma) * np.exp(-gamma * t)
    return float(np.abs(f.grids - expected).max())


CHECKS: List[Check] = [
    ("completeness", _completeness, 1e-10),
    ("basis_round_trip", _basis_round_trip, 1e-10),
    ("displacement_algebra", _displacements, 1e-10),
    ("phase_point_structure", _phase_point_structure, 1e-10),
    ("weyl_round_trip_and_paths", _weyl_paths, 1e-10),
    ("traciality", _traciality, 1e-10),
    ("wigner_marginals_purity", _wigner_readouts, 1e-10),
    ("husimi_positivity", _husimi_positivity, 1e-10),
    ("husimi_gaussian_smoothing", _husimi_smoothing, 1e-8),
    ("kernel_equals_commutator", _kernel_equivalence, 1e-10),
    ("engine_equivalence", _engine_equivalence, 1e-6),
    ("one_body_expectation", _one_body, 1e-10),
    ("wick_vs_fock", _wick_vs_fock, 1e-10),
    ("unification", _unification, 1e-6),
    ("dissipative_closed_form", _dissipative_closed_form, 1e-8),
]


def run_invariant_suite(sizes: Iterable[int] = (5,), seed: int = 0) -> pd.DataFrame:
    """
    Run every check at each lattice size.

    Args:
        sizes: Odd lattice sizes
        seed: Seed shared by all checks

    Returns:
        DataFrame with columns check, N, max_error, tolerance, passed
    """
    rows = []
    for n in sizes:
        space = make_space(n)
        for name, check, tolerance in CHECKS:
            rng = np.random.default_rng(seed)
            try:
                error = float(check(space, rng))
                passed = bool(error <= tolerance)
            except Exception as exc:  # noqa: BLE001
                logger.error("Check %s failed at N=%d: %s", name, n, exc, exc_info=True)
                error, passed = float("nan"), False
            rows.append({"check": name, "N": n, "max_error": error, "tolerance": tolerance, "passed": passed})
            logger.info("%-28s N=%-3d max_error=%.3e %s", name, n, error, "PASS" if passed else "FAIL")
    return pd.DataFrame(rows)
