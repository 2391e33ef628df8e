import math

import numpy as np
import pytest

from config import settings
from models import FLAG_OK, FLAG_TRUNCATED, Ensemble, GaussianPacket, Grid2D
from services import analytic_states, grid_wavefield, guidance
from services.analytic_states import TwoBodyState


def _ensemble(positions: np.ndarray) -> Ensemble:
    """Hand-made lock-step ensemble from (n_samples, n, d) positions."""
    n_s, n, _ = positions.shape
    return Ensemble(times=np.arange(n_s, dtype=float), positions=positions,
                    velocities=np.zeros_like(positions), q=np.zeros((n_s, n)),
                    ke=np.zeros((n_s, n)), lengths=np.full(n, n_s),
                    flags=np.zeros(n, dtype=int))


def test_sampling_is_prefix_stable(unit_gaussian):
    short = guidance.sample_initial(unit_gaussian, 10, seed=3)
    long = guidance.sample_initial(unit_gaussian, 2500, seed=3)
    np.testing.assert_array_equal(short, long[:10])
    assert long.shape == (2500, 1)


def test_sampling_depends_on_seed(unit_gaussian):
    a = guidance.sample_initial(unit_gaussian, 50, seed=1)
    b = guidance.sample_initial(unit_gaussian, 50, seed=2)
    assert not np.array_equal(a, b)
    assert guidance.sample_initial(unit_gaussian, 0, seed=1).shape == (0, 1)


def test_sampling_moments(unit_gaussian):
    samples = guidance.sample_initial(unit_gaussian, 20_000, seed=11)[:, 0]
    assert abs(samples.mean()) < 0.05
    assert samples.std() == pytest.approx(1.0, abs=0.05)


def test_integrate_follows_spreading_oracle(unit_gaussian):
    x0 = np.array([0.5, 1.0, -1.5])
    ensemble = guidance.integrate(x0[:, None], unit_gaussian, 0.0, 2.0, 0.01)
    # sigma(t) / sigma0 = sqrt(1 + (t/2)^2) = sqrt(2) at t = 2
    np.testing.assert_allclose(ensemble.positions[-1, :, 0], x0 * math.sqrt(2.0), atol=1e-7)
    assert (ensemble.flags == FLAG_OK).all()


def test_integrate_records_every_nth_step_and_the_last(unit_gaussian):
    ensemble = guidance.integrate(np.zeros((2, 1)), unit_gaussian, 0.0, 1.0, 0.1,
                                  record_every=3)
    np.testing.assert_allclose(ensemble.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert ensemble.lengths.tolist() == [5, 5]


def test_integrate_reports_energy_diagnostics(moving_gaussian):
    ensemble = guidance.integrate(np.array([[-1.0]]), moving_gaussian, 0.0, 0.5, 0.05)
    v = ensemble.velocities[:, 0, 0]
    np.testing.assert_allclose(ensemble.ke[:, 0], 0.5 * v**2)
    q, _ = analytic_states.potential_field(moving_gaussian, ensemble.positions[-1], 0.5)
    assert ensemble.q[-1, 0] == pytest.approx(q[0])


def test_trajectory_starting_on_a_node_is_truncated():
    state = analytic_states.gaussian_slits(2.0, 0.5, 1.0, 1.0, coefficients=(1.0, -1.0))
    ensemble = guidance.integrate(np.array([[0.0], [2.0]]), state, 0.0, 0.5, 0.05)
    assert ensemble.flags.tolist() == [FLAG_TRUNCATED, FLAG_OK]
    assert ensemble.lengths[0] == 0
    assert ensemble.lengths[1] == ensemble.times.size
    assert ensemble.trajectory(1).positions.shape == (ensemble.times.size, 1)


def test_velocity_bias_hook_speeds_up_trajectories(monkeypatch):
    state = analytic_states.AnalyticState.single(GaussianPacket(center=(0.0,), sigma0=1.0, k=(3.0,)))
    plain = guidance.integrate(np.array([[0.0]]), state, 0.0, 1.0, 0.01)
    monkeypatch.setattr(settings, "velocity_bias", 1.1)
    biased = guidance.integrate(np.array([[0.0]]), state, 0.0, 1.0, 0.01)
    assert plain.positions[-1, 0, 0] == pytest.approx(3.0, abs=1e-8)
    assert biased.positions[-1, 0, 0] > 3.2


def test_grid_provider_matches_wavenumber():
    grid = Grid2D.spanning((-8.0, 8.0), (-8.0, 8.0), 161, 161)
    packet = GaussianPacket(center=(0.0, 0.0), sigma0=1.5, k=(1.0, -0.5))
    provider = guidance.GridVelocityProvider([grid_wavefield.gaussian_field(grid, packet)])
    points = np.array([[0.05, -0.05], [7.9, 0.0], [20.0, 0.0]])
    v, valid = provider.velocity(points, 0.0)
    assert valid.tolist() == [True, False, False]
    np.testing.assert_allclose(v[0], [1.0, -0.5], atol=1e-2)


def test_grid_provider_from_propagation_interpolates_in_time():
    grid = Grid2D.periodic((-10.0, 10.0), (-10.0, 10.0), 96, 96)
    packet = GaussianPacket(center=(0.0, 0.0), sigma0=1.5, k=(0.5, 0.0))
    start = grid_wavefield.gaussian_field(grid, packet)
    provider = guidance.GridVelocityProvider.from_propagation(start, None, 0.01, 20, every=10)
    np.testing.assert_allclose(provider.times, [0.0, 0.1, 0.2])
    ensemble = guidance.integrate(np.array([[0.0, 0.0]]), provider, 0.0, 0.2, 0.01)
    assert ensemble.positions[-1, 0, 0] == pytest.approx(0.1, abs=2e-3)


def test_no_crossing_detects_swap():
    positions = np.array([[[0.0], [1.0], [2.0]],
                          [[0.1], [1.1], [2.1]],
                          [[1.2], [1.1], [2.2]]])
    report = guidance.check_no_crossing(_ensemble(positions))
    assert not report.ok
    assert report.pair == (0, 1)
    assert report.time == 2.0
    assert report.violations == 1
    assert guidance.check_no_crossing(_ensemble(positions[:2])).ok


def test_count_diagonal_crossings():
    positions = np.array([[[-1.0, 1.0], [2.0, 1.0]],
                          [[-0.5, 0.5], [2.5, 1.0]],
                          [[0.5, -0.5], [3.0, 1.0]]])
    assert guidance.count_diagonal_crossings(_ensemble(positions)) == 1


def test_equivariance_distance_small_for_free_spreading(unit_gaussian):
    initials = guidance.sample_initial(unit_gaussian, 4000, seed=5)
    ensemble = guidance.integrate(initials, unit_gaussian, 0.0, 2.0, 0.05, record_every=10)
    assert guidance.equivariance_distance(ensemble, unit_gaussian, 2.0) < 0.04


def test_marginal_cdf_of_two_body_state():
    g1 = GaussianPacket(center=(-2.0,), sigma0=1.0, k=(1.0,))
    g2 = GaussianPacket(center=(2.0,), sigma0=1.0, k=(-1.0,))
    cdf = guidance.marginal_cdf(TwoBodyState("antisymmetric", g1, g2), 0.0, axis=0)
    assert cdf(np.array([-20.0]))[0] == 0.0
    assert cdf(np.array([20.0]))[0] == 1.0
    assert cdf(np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-6)
