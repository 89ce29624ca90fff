"""
Correlation matrices, the Klimontovich average and one-/two-body assembly.
"""
import numpy as np
import pytest

from src.core.space import OperatorError, OperatorMatrix, canonical_operators, random_density, random_hermitian
from src.core.weyl import WeylSymbol, weyl_symbol
from src.processors.dynamics import PropagatorConfig, propagate_symbol
from src.processors.thirdq import (
    CorrelationState,
    ModeDecomposition,
    assemble_one_body,
    assemble_two_body,
    ballistic_step_corr,
    contact_interaction,
    correlation_from_distribution,
    h_symbol,
    klimontovich_average,
    load_correlation_csv,
    one_body_expectation,
    save_correlation_csv,
    wick_expectation,
)


def _filling(space, rng, scale=0.5):
    return CorrelationState(space, scale * random_density(space, rng).entries)


def test_klimontovich_examples(space5):
    flat = klimontovich_average(CorrelationState(space5, np.eye(5) / 5))
    assert flat.kind == "wigner"
    assert np.allclose(flat.grid, 1 / 5)

    localized = np.zeros((5, 5))
    localized[2, 2] = 1.0
    column = klimontovich_average(CorrelationState(space5, localized)).grid
    expected = np.zeros((5, 5))
    expected[:, 2] = 1.0
    assert np.allclose(column, expected, atol=1e-12)


def test_klimontovich_round_trip(space15, rng):
    corr = _filling(space15, rng)
    dist = klimontovich_average(corr)
    assert dist.total() == pytest.approx(corr.particle_number, abs=1e-12)
    back = correlation_from_distribution(dist)
    assert np.abs(back.matrix - corr.matrix).max() < 1e-10


def test_correlation_validation(space5):
    with pytest.raises(OperatorError, match="Hermitian"):
        CorrelationState(space5, np.triu(np.ones((5, 5))) * 0.1)
    with pytest.raises(OperatorError, match="negative occupation"):
        CorrelationState(space5, -0.1 * np.eye(5))
    with pytest.raises(OperatorError, match="exceeds 1"):
        CorrelationState(space5, 1.5 * np.eye(5))
    bosons = CorrelationState(space5, 1.5 * np.eye(5), statistics="boson")
    assert bosons.particle_number == pytest.approx(7.5)
    with pytest.raises(ValueError, match="statistics"):
        CorrelationState(space5, np.eye(5) / 5, statistics="anyon")


def test_mode_decomposition(space15, rng):
    coefficients = rng.normal(size=15) + 1j * rng.normal(size=15)
    modes = ModeDecomposition(space15, coefficients)
    back = ModeDecomposition.from_momentum(space15, modes.to_momentum())
    assert np.abs(back.coefficients - coefficients).max() < 1e-12
    assert np.linalg.norm(modes.to_momentum()) == pytest.approx(np.linalg.norm(coefficients))
    corr = modes.correlation()
    assert corr.particle_number == pytest.approx(1.0)
    assert np.sort(corr.occupations())[-1] == pytest.approx(1.0)


def test_momentum_mode_occupies_one_row(space5):
    modes = ModeDecomposition(space5, space5.momentum_state(3))
    assert np.abs(modes.to_momentum() - np.eye(5)[3]).max() < 1e-12
    grid = klimontovich_average(modes.correlation()).grid
    expected = np.zeros((5, 5))
    expected[3, :] = 1.0
    assert np.allclose(grid, expected, atol=1e-12)


def test_one_body_examples(space5, rng):
    corr = _filling(space5, rng)
    identity_table = assemble_one_body(OperatorMatrix.identity(space5))
    assert np.allclose(identity_table, np.eye(5))
    assert one_body_expectation(identity_table, corr) == pytest.approx(corr.particle_number)

    position, _ = canonical_operators(space5)
    expected = np.sum(np.arange(5) * np.diag(corr.matrix))
    assert one_body_expectation(assemble_one_body(position), corr) == pytest.approx(expected)


def test_one_body_random(space15, rng):
    a = OperatorMatrix(space15, rng.normal(size=(15, 15)) + 1j * rng.normal(size=(15, 15)))
    corr = _filling(space15, rng)
    table = assemble_one_body(a)
    assert abs(one_body_expectation(table, corr) - np.trace(a.entries @ corr.matrix)) < 1e-12


def test_two_body_assembly(rng):
    assert not assemble_two_body(np.zeros((3, 3, 3, 3))).any()
    contact = assemble_two_body(contact_interaction(3, 2.0))
    assert contact[0, 1, 1, 0] == 2.0 and contact[0, 1, 0, 1] == 0.0
    broken = rng.normal(size=(3, 3, 3, 3))
    with pytest.raises(OperatorError, match="symmetry"):
        assemble_two_body(broken)
    with pytest.raises(OperatorError, match="shape"):
        assemble_two_body(np.zeros((3, 3, 3)))


def test_wick_statistics_sign(rng):
    table = contact_interaction(3, 1.3)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    g = g @ g.conj().T / 10
    fermion = wick_expectation(table, g, "fermion")
    boson = wick_expectation(table, g, "boson")
    direct = np.einsum("abcd,da,cb->", table, g, g)
    exchange = np.einsum("abcd,ca,db->", table, g, g)
    assert fermion == pytest.approx(direct - exchange)
    assert boson == pytest.approx(direct + exchange)
    assert boson - fermion == pytest.approx(2 * exchange)


def test_ballistic_step_trivial_cases(space5, rng):
    corr = _filling(space5, rng)
    assert np.allclose(ballistic_step_corr(corr, np.zeros((5, 5)), 0.7).matrix, corr.matrix)

    diagonal = CorrelationState(space5, np.diag(rng.uniform(0, 1, size=5)))
    h = np.diag(rng.normal(size=5))
    assert np.allclose(ballistic_step_corr(diagonal, h, 1.3).matrix, diagonal.matrix, atol=1e-12)


def test_ballistic_step_rejects_non_hermitian(space5, rng):
    with pytest.raises(OperatorError):
        ballistic_step_corr(_filling(space5, rng), np.triu(np.ones((5, 5))), 0.1)


def test_klimontovich_commutes_with_evolution(space15, rng):
    h = random_hermitian(space15, rng)
    corr = _filling(space15, rng)
    f0 = WeylSymbol(space15, klimontovich_average(corr).grid)
    trajectory = propagate_symbol(f0, h, PropagatorConfig(engine="spectral_moyal", dt=1e-3, steps=500, stride=50))
    assert len(trajectory.snapshots) == 11
    for snapshot in trajectory.snapshots[1:]:
        stepped = ballistic_step_corr(corr, h, snapshot.time)
        assert np.abs(klimontovich_average(stepped).grid - snapshot.grid).max() < 1e-6


def test_h_symbol_matches_weyl(space5, rng):
    h = random_hermitian(space5, rng)
    assert np.abs(h_symbol(h, space5).grid - weyl_symbol(h).grid).max() < 1e-12


def test_correlation_csv_round_trip(tmp_path, space15, rng):
    corr = _filling(space15, rng)
    path = save_correlation_csv(corr, tmp_path / "correlation.csv")
    loaded = load_correlation_csv(space15, path)
    assert np.array_equal(loaded.matrix, corr.matrix)
    assert loaded.statistics == "fermion"
