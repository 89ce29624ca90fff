"""
Wigner, Husimi and ordering-smoothed distributions with their readouts.
"""
from datetime import datetime

import numpy as np
import pytest

from src.core.space import (
    OperatorError,
    OperatorMatrix,
    basis_state,
    make_space,
    mixed_state,
    momentum_basis_state,
    random_density,
    random_hermitian,
    random_pure_state,
)
from src.core.weyl import ordering_phase, weyl_symbol
from src.processors.distributions import (
    QuasiDistribution,
    centroid,
    gaussian_smoothing,
    husimi_of,
    load_distribution,
    load_distribution_json,
    make_frame,
    marginals,
    ordered_distribution,
    periodized_gaussian,
    purity,
    save_distribution,
    save_distribution_json,
    smoothed_distribution,
    symbol_distribution,
    unsmooth,
    wavepacket_state,
    wigner_of,
)


def test_wigner_examples(space5):
    assert np.allclose(wigner_of(mixed_state(space5)).grid, 1 / 5)

    column = wigner_of(basis_state(space5, 1)).grid
    expected = np.zeros((5, 5))
    expected[:, 1] = 1.0
    assert np.allclose(column, expected, atol=1e-12)

    row = wigner_of(momentum_basis_state(space5, 3)).grid
    expected = np.zeros((5, 5))
    expected[3, :] = 1.0
    assert np.allclose(row, expected, atol=1e-12)


def test_wigner_is_real_and_normalized(space15, rng):
    dist = wigner_of(random_density(space15, rng))
    assert dist.kind == "wigner"
    assert dist.is_real
    assert dist.total() == pytest.approx(1.0, abs=1e-12)


def test_wigner_requires_density(space5):
    with pytest.raises(OperatorError, match="density"):
        wigner_of(OperatorMatrix.identity(space5))


def test_unknown_kind_rejected(space5):
    with pytest.raises(ValueError, match="kind"):
        QuasiDistribution(space5, np.zeros((5, 5)), "glauber")


def test_identity_smoothing_is_wigner(space15, rng):
    rho = random_density(space15, rng)
    smoothed = smoothed_distribution(rho, np.ones((15, 15)))
    assert np.abs(smoothed.grid - wigner_of(rho).grid).max() < 1e-12


@pytest.mark.parametrize("ordering,kind", [("normal", "p_function"), ("antinormal", "custom_smoothed")])
def test_ordered_distributions_are_invertible(space15, rng, ordering, kind):
    rho = random_density(space15, rng)
    dist = ordered_distribution(rho, ordering)
    assert dist.kind == kind
    assert np.allclose(dist.smoothing, ordering_phase(space15, ordering))
    # normalization is fixed by g(0, 0) = 1
    assert dist.total() == pytest.approx(1.0, abs=1e-10)
    assert np.abs(unsmooth(dist).grid - wigner_of(rho).grid).max() < 1e-10


def test_unsmooth_rejects_zeros(space5, rng):
    g = np.ones((5, 5))
    g[1, 1] = 0.0
    dist = smoothed_distribution(random_density(space5, rng), g)
    with pytest.raises(ValueError, match="zeros"):
        unsmooth(dist)


def test_frame_resolves_identity(space15):
    frame = make_frame(space15)
    assert frame.sigma == pytest.approx(np.sqrt(15 / (4 * np.pi)))
    assert np.abs(frame.resolution() - np.eye(15)).max() < 1e-12
    assert np.linalg.norm(frame.state(4, 7)) == pytest.approx(1.0)


def test_periodized_gaussian_rejects_bad_width(space5):
    with pytest.raises(ValueError, match="width"):
        periodized_gaussian(space5, 0.0)


def test_husimi_of_frame_state(space15):
    frame = make_frame(space15)
    projector = OperatorMatrix.pure(space15, frame.state(6, 9))
    grid = husimi_of(projector, frame).grid
    assert np.unravel_index(np.argmax(grid), grid.shape) == (6, 9)
    assert grid[6, 9] == pytest.approx(1.0, abs=1e-12)


def test_husimi_of_mixed_state_is_flat(space15):
    grid = husimi_of(mixed_state(space15), make_frame(space15)).grid
    assert np.allclose(grid, 1 / 15, atol=1e-12)


@pytest.mark.parametrize("n", [15, 31])
def test_husimi_positivity(n, rng):
    space = make_space(n)
    frame = make_frame(space)
    for _ in range(100):
        assert husimi_of(random_pure_state(space, rng), frame).grid.min() >= -1e-10


@pytest.mark.parametrize("n", [5, 15, 31])
def test_gaussian_smoothing_matches_husimi(n, rng):
    space = make_space(n)
    frame = make_frame(space)
    rho = random_density(space, rng)
    smoothed = smoothed_distribution(rho, gaussian_smoothing(space, frame.sigma), kind="husimi")
    husimi = husimi_of(rho, frame)
    assert np.abs(np.real(smoothed.grid) - husimi.grid).max() < 1e-12
    assert np.abs(gaussian_smoothing(space, frame.sigma) - frame.cf().conj()).max() < 1e-12


def test_gaussian_smoothing_default_width_is_frame_width(space5):
    assert np.array_equal(gaussian_smoothing(space5), gaussian_smoothing(space5, make_frame(space5).sigma))


def test_husimi_unsmooths_to_wigner(space15, rng):
    rho = random_density(space15, rng)
    husimi = husimi_of(rho, make_frame(space15))
    assert np.abs(unsmooth(husimi).grid - wigner_of(rho).grid).max() < 1e-6


def test_marginals(space5, rng):
    q_marginal, p_marginal = marginals(wigner_of(basis_state(space5, 2)))
    assert np.allclose(q_marginal, np.eye(5)[2], atol=1e-12)
    assert np.allclose(p_marginal, 1 / 5, atol=1e-12)

    q_marginal, p_marginal = marginals(wigner_of(mixed_state(space5)))
    assert np.allclose(q_marginal, 1 / 5) and np.allclose(p_marginal, 1 / 5)

    rho = random_density(space5, rng)
    q_marginal, p_marginal = marginals(wigner_of(rho))
    assert np.abs(q_marginal - np.diag(rho.entries).real).max() < 1e-12
    assert np.abs(p_marginal - np.diag(rho.in_basis("p").entries).real).max() < 1e-12


def test_marginals_need_wigner(space5):
    with pytest.raises(ValueError, match="wigner"):
        marginals(husimi_of(mixed_state(space5), make_frame(space5)))


def test_purity(space15, rng):
    assert purity(wigner_of(random_pure_state(space15, rng))) == pytest.approx(1.0, abs=1e-10)
    assert purity(wigner_of(mixed_state(space15))) == pytest.approx(1 / 15, abs=1e-12)


def test_wavepacket_centroid():
    space = make_space(63)
    dist = wigner_of(wavepacket_state(space, (20, 41)))
    p_c, q_c = centroid(dist)
    assert p_c == pytest.approx(20, abs=0.05)
    assert q_c == pytest.approx(41, abs=0.05)


def test_symbol_distribution_drops_negligible_imag(space5, rng):
    dist = symbol_distribution(weyl_symbol(random_hermitian(space5, rng)))
    assert dist.is_real


def test_csv_round_trip(tmp_path, space15, rng):
    dist = wigner_of(random_density(space15, rng))
    path = save_distribution(dist, tmp_path / "wigner.csv")
    loaded = load_distribution(space15, path)
    assert np.array_equal(loaded.grid, dist.grid)

    smoothed = ordered_distribution(random_density(space15, rng), "normal")
    path = save_distribution(smoothed, tmp_path / "p_function.csv")
    assert np.array_equal(load_distribution(space15, path, "p_function").grid, smoothed.grid)


def test_csv_wrong_size_rejected(tmp_path, space5, space15, rng):
    path = save_distribution(wigner_of(random_density(space5, rng)), tmp_path / "small.csv")
    with pytest.raises(ValueError, match="expected N=15"):
        load_distribution(space15, path)


def test_json_round_trip(tmp_path, space5, rng):
    dist = husimi_of(random_density(space5, rng), make_frame(space5))
    path = save_distribution_json(dist, tmp_path / "husimi.json", timestamp="2024-03-01T12:00:00+00:00")
    loaded, metadata = load_distribution_json(space5, path)
    assert loaded.kind == "husimi"
    assert np.array_equal(loaded.grid, dist.grid)
    assert isinstance(metadata["timestamp"], datetime)
    assert metadata["timestamp"].year == 2024
    assert metadata["normalization"] == pytest.approx(1.0)
