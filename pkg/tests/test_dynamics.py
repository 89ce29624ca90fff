"""
Moyal right-hand sides, the lattice kernel and the propagator engines.
"""
import json

import numpy as np
import pytest

from src.core.space import OperatorError, OperatorMatrix, make_space, mixed_state, random_density, random_hermitian
from src.core.weyl import WeylSymbol, weyl_symbol
from src.processors.distributions import centroid, wavepacket_state, wigner_of
from src.processors.dynamics import (
    ENGINES,
    PropagationError,
    PropagatorConfig,
    build_kernel,
    evolve,
    gradient_expansion_rhs,
    moyal_rhs,
    propagate_symbol,
    save_trajectory,
)
from src.processors.hamiltonians import HamiltonianSpec, from_matrix, harmonic, kicked_rotor, tight_binding
from src.utils.file_utils import load_grid_csv


def _random_symbol(space, rng):
    return weyl_symbol(random_hermitian(space, rng))


def _ring_distance(a, b, n):
    d = abs(a - b) % n
    return min(d, n - d)


def test_rhs_of_maximally_mixed_state_vanishes(space15, rng):
    f = weyl_symbol(mixed_state(space15))
    assert np.abs(moyal_rhs(random_hermitian(space15, rng), f).grid).max() < 1e-12


def test_rhs_of_commuting_diagonals_vanishes(space15, rng):
    h = OperatorMatrix(space15, np.diag(rng.normal(size=15)), tag="hermitian")
    rho = OperatorMatrix(space15, np.diag(rng.dirichlet(np.ones(15))), tag="density")
    assert np.abs(moyal_rhs(h, weyl_symbol(rho)).grid).max() < 1e-12


def test_rhs_matches_oracle_finite_difference(space15):
    h = harmonic(space15)
    rho = wavepacket_state(space15, (5, 9))
    f0 = wigner_of(rho)
    epsilon = 1e-6
    cfg = PropagatorConfig(engine="oracle", dt=epsilon, steps=1, stride=1)
    later = evolve(rho, h, cfg).final.grid
    difference = (later - f0.grid) / epsilon
    rhs = moyal_rhs(h, WeylSymbol(space15, f0.grid)).grid
    assert np.abs(difference - rhs).max() < 1e-3 * max(1.0, np.abs(rhs).max())


def test_rhs_is_real_and_traceless(space15, rng):
    rhs = moyal_rhs(random_hermitian(space15, rng), _random_symbol(space15, rng))
    assert rhs.max_imag() < 1e-10
    assert abs(rhs.total()) < 1e-10


def test_kernel_equals_commutator(space5, rng):
    h = random_hermitian(space5, rng)
    kernel = build_kernel(h)
    assert kernel.dense.dtype == float
    for _ in range(20):
        f = _random_symbol(space5, rng)
        expected = moyal_rhs(h, f).grid
        assert np.abs(kernel.apply(f) - expected).max() < 1e-10
        assert np.abs(kernel.apply_factorized(f) - expected).max() < 1e-10


def test_kernel_of_identity_hamiltonian_vanishes(space5):
    kernel = build_kernel(OperatorMatrix(space5, 3.0 * np.eye(5), tag="hermitian"))
    assert np.abs(kernel.as_matrix()).max() < 1e-12


def test_kernel_annihilates_own_symbol(space5, rng):
    h = random_hermitian(space5, rng)
    kernel = build_kernel(h)
    assert np.abs(kernel.apply(weyl_symbol(h))).max() < 1e-10


def test_factorized_kernel_builds_dense_on_demand(space5, rng):
    h = random_hermitian(space5, rng)
    lazy = build_kernel(h, dense=False)
    assert lazy.dense is None
    assert np.abs(lazy.as_matrix() - build_kernel(h).as_matrix()).max() < 1e-12


def test_gradient_expansion_structure(space15, rng):
    h = random_hermitian(space15, rng)
    f = _random_symbol(space15, rng)
    for order in (1, 3, 5):
        rhs = gradient_expansion_rhs(h, f, order=order)
        assert abs(rhs.grid.sum()) < 1e-8
        assert rhs.max_imag() < 1e-8
    assert np.abs(gradient_expansion_rhs(h, f, 3).grid - gradient_expansion_rhs(h, f, 1).grid).max() > 0
    h_diag = OperatorMatrix(space15, np.diag(rng.normal(size=15)), tag="hermitian")
    f_diag = weyl_symbol(OperatorMatrix(space15, np.diag(rng.dirichlet(np.ones(15))), tag="density"))
    assert np.abs(gradient_expansion_rhs(h_diag, f_diag, 5).grid).max() < 1e-10


def test_gradient_expansion_order_validation(space5, rng):
    with pytest.raises(ValueError, match="order"):
        gradient_expansion_rhs(random_hermitian(space5, rng), _random_symbol(space5, rng), order=2)


def test_gradient_expansion_logs_warning(space5, rng, caplog):
    with caplog.at_level("WARNING", logger="src.processors.dynamics"):
        gradient_expansion_rhs(random_hermitian(space5, rng), _random_symbol(space5, rng), order=3)
    records = [r for r in caplog.records if "gradient expansion" in r.getMessage()]
    assert records and records[0].levelname == "WARNING"
    assert "order 3" in records[0].getMessage()


def test_config_validation():
    with pytest.raises(ValueError, match="engine"):
        PropagatorConfig(engine="euler")
    with pytest.raises(ValueError, match="divide"):
        PropagatorConfig(steps=10, stride=3)
    with pytest.raises(ValueError, match="dt"):
        PropagatorConfig(dt=0.0)
    with pytest.raises(ValueError, match="split_step"):
        PropagatorConfig(engine="kernel_quadrature", integrator="split_step")
    assert PropagatorConfig(dt=0.5, steps=4, stride=2).total_time == pytest.approx(2.0)


@pytest.mark.parametrize("engine", ENGINES)
def test_zero_hamiltonian_keeps_symbol(space5, rng, engine):
    h = HamiltonianSpec(space5, "zero", matrix=np.zeros((5, 5)))
    rho = random_density(space5, rng)
    trajectory = evolve(rho, h, PropagatorConfig(engine=engine, dt=0.1, steps=10, stride=5))
    assert len(trajectory.snapshots) == 3
    for snapshot in trajectory.snapshots:
        assert np.abs(snapshot.grid - wigner_of(rho).grid).max() < 1e-12


def test_engines_match_oracle(space31, rng):
    h = from_matrix(random_hermitian(space31, rng))
    rho = random_density(space31, rng)
    reference = evolve(rho, h, PropagatorConfig(engine="oracle", dt=1e-3, steps=1000, stride=100))
    for engine in ("spectral_moyal", "kernel_quadrature"):
        trajectory = evolve(rho, h, PropagatorConfig(engine=engine, dt=1e-3, steps=1000, stride=100))
        assert trajectory.warnings == []
        assert trajectory.drift("purity") < 1e-6
        assert trajectory.drift("energy") < 1e-6
        assert trajectory.conserved()["max_imag"].max() < 1e-8
        for ours, exact in zip(trajectory.snapshots, reference.snapshots):
            assert ours.step == exact.step
            assert np.abs(ours.grid - exact.grid).max() < 1e-6


def test_harmonic_orbit_closes():
    space = make_space(127)
    h = harmonic(space, omega0=1.0)
    start = (63.0, 67.0)
    rho = wavepacket_state(space, start)
    period = 2 * np.pi
    trajectory = evolve(rho, h, PropagatorConfig(engine="oracle", dt=period / 40, steps=40, stride=10))
    first, last = trajectory.distributions()[0], trajectory.distributions()[-1]
    p0, q0 = centroid(first)
    p1, q1 = centroid(last)
    assert _ring_distance(p0, p1, 127) < 1.0
    assert _ring_distance(q0, q1, 127) < 1.0
    # a quarter period later the packet has left its start
    p_mid, q_mid = centroid(trajectory.distributions()[1])
    assert _ring_distance(p_mid, p0, 127) + _ring_distance(q_mid, q0, 127) > 2.0
    assert trajectory.drift("trace") < 1e-8
    assert trajectory.drift("purity") < 1e-6


def test_split_step_tracks_oracle(space15):
    h = harmonic(space15)
    rho = wavepacket_state(space15, (4, 10))
    exact = evolve(rho, h, PropagatorConfig(engine="oracle", dt=1e-3, steps=100, stride=100)).final.grid
    split = evolve(
        rho, h, PropagatorConfig(engine="spectral_moyal", integrator="split_step", dt=1e-3, steps=100, stride=100)
    ).final.grid
    assert np.abs(split - exact).max() < 1e-4


def test_split_step_needs_separable_hamiltonian(space5, rng):
    cfg = PropagatorConfig(engine="spectral_moyal", integrator="split_step", dt=0.01, steps=1, stride=1)
    with pytest.raises(OperatorError, match="separable"):
        evolve(random_density(space5, rng), random_hermitian(space5, rng), cfg)


def test_time_dependent_engines_agree(space15):
    h = kicked_rotor(space15, kick=0.3, period=0.5, width=0.1)
    rho = wavepacket_state(space15, (3, 7))
    cfg = dict(dt=1e-3, steps=500, stride=100)
    exact = evolve(rho, h, PropagatorConfig(engine="oracle", **cfg)).final.grid
    stepped = evolve(rho, h, PropagatorConfig(engine="spectral_moyal", **cfg)).final.grid
    # both use the midpoint-frozen H; they differ only by the rk4 error
    assert np.abs(stepped - exact).max() < 1e-6


def test_large_step_is_flagged(space15, rng):
    h = tight_binding(space15, hopping=5.0)
    trajectory = evolve(random_density(space15, rng), h, PropagatorConfig(dt=0.05, steps=2, stride=1))
    assert trajectory.warnings and "stability" in trajectory.warnings[0]


def test_non_finite_symbol_raises(space5, rng):
    grid = np.full((5, 5), np.nan)
    with pytest.raises(PropagationError) as info:
        propagate_symbol(WeylSymbol(space5, grid), random_hermitian(space5, rng), PropagatorConfig(dt=0.01, steps=3, stride=1))
    assert info.value.step == 1


def test_evolve_requires_density(space5, rng):
    with pytest.raises(OperatorError):
        evolve(random_hermitian(space5, rng), random_hermitian(space5, rng), PropagatorConfig(steps=1, stride=1))


def test_conserved_log(space15, rng):
    h = random_hermitian(space15, rng)
    trajectory = evolve(random_density(space15, rng), h, PropagatorConfig(dt=1e-2, steps=20, stride=5))
    table = trajectory.conserved()
    assert list(table.columns) == ["step", "time", "trace", "purity", "energy", "max_imag"]
    assert len(table) == 5
    assert trajectory.drift("trace") < 1e-10
    assert trajectory.drift("energy") < 1e-8


def test_save_trajectory_round_trip_and_determinism(tmp_path, space15):
    h = harmonic(space15)
    rho = wavepacket_state(space15, (5, 8))
    cfg = PropagatorConfig(dt=1e-3, steps=20, stride=10)
    first = save_trajectory(evolve(rho, h, cfg), tmp_path / "a")
    second = save_trajectory(evolve(rho, h, cfg), tmp_path / "b")

    manifest = json.loads(first.read_text())
    assert manifest["engine"] == "spectral_moyal" and manifest["N"] == 15
    assert [s["step"] for s in manifest["snapshots"]] == [0, 10, 20]
    for entry in manifest["snapshots"]:
        left = (tmp_path / "a" / entry["file"]).read_bytes()
        right = (tmp_path / "b" / entry["file"]).read_bytes()
        assert left == right
    trajectory = evolve(rho, h, cfg)
    loaded = load_grid_csv(tmp_path / "a" / manifest["snapshots"][-1]["file"])
    assert np.array_equal(loaded, trajectory.final.grid.real)
    assert second.name == "manifest.json"


def test_dense_kernel_applies_to_complex_grid(space5, rng):
    kernel = build_kernel(random_hermitian(space5, rng))
    grid = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    expected = (kernel.as_matrix() @ grid.reshape(25)).reshape(5, 5)
    assert np.abs(kernel.apply(grid) - expected).max() < 1e-12
    assert np.abs(kernel.apply(grid.real) - kernel.apply(grid).real).max() < 1e-12
