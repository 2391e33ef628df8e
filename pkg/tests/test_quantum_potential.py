import math

import numpy as np
import pytest

from models import GaussianPacket, Grid2D, NodeProximity, PhaseWrap, PlaneWave, ScalarField
from services import analytic_states, grid_wavefield
from services.analytic_states import AnalyticState, StationaryState
from services.quantum_potential import (energy_decompose, hj_residual,
                                        phase_time_derivative, q_field)


@pytest.fixture
def ground_state() -> StationaryState:
    """Harmonic ground state for m = omega = hbar = 1."""
    shape = AnalyticState.single(GaussianPacket(center=(0.0,), sigma0=math.sqrt(0.5), k=(0.0,)))
    return StationaryState(shape, energy=0.5)


def test_q_field_matches_gaussian_oracle(unit_gaussian, line_grid):
    field = analytic_states.to_wavefield(unit_gaussian, line_grid, 0.0)
    q = q_field(field)
    x = line_grid.x
    inside = np.abs(x) <= 4.0
    error = np.abs(q.values[:, 4] - (0.25 - x**2 / 8.0))[inside]
    assert error.max() < 5e-3


def test_q_field_ignores_global_phase_and_scale():
    grid = Grid2D.spanning((-6.0, 6.0), (-6.0, 6.0), 64, 64)
    packet = GaussianPacket(center=(0.5, -0.3), sigma0=1.2, k=(0.7, -0.4))
    field = grid_wavefield.gaussian_field(grid, packet, t=0.8)
    base = q_field(field)
    for psi in (np.exp(0.7j) * field.psi, 3.5 * field.psi):
        other = q_field(field.with_psi(psi))
        assert np.max(np.abs(other.values - base.values)) < 1e-10 * base.max_abs()
        assert np.array_equal(other.mask, base.mask)


def test_q_field_masks_nodes():
    grid = Grid2D.spanning((-3.0, 3.0), (0.0, 7.0), 61, 8)
    state = analytic_states.gaussian_slits(1.5, 0.5, 1.0, 1.0, coefficients=(1.0, -1.0))
    q = q_field(analytic_states.to_wavefield(state, grid, 0.0))
    assert q.mask[30].all()
    assert q.values[30, 0] == 0.0


def test_energy_split_of_harmonic_ground_state(ground_state):
    for x in (-1.5, 0.0, 0.7, 2.0):
        split = energy_decompose(ground_state, lambda p: 0.5 * p[:, 0]**2, [x], t=0.3)
        assert split.ke == pytest.approx(0.0, abs=1e-12)
        assert split.qpe == pytest.approx((1.0 - x * x) / 2.0, abs=1e-10)
        assert split.total == pytest.approx(0.5, abs=1e-10)


def test_energy_split_of_plane_wave():
    wave = AnalyticState.single(PlaneWave(k=(2.0,)))
    split = energy_decompose(wave, 1.5, [0.7])
    assert split.ke == pytest.approx(2.0)
    assert split.qpe == pytest.approx(0.0, abs=1e-12)
    assert split.total == pytest.approx(3.5)


def test_energy_split_on_grid_field():
    wave = AnalyticState.single(PlaneWave(k=(1.0,)))
    grid = Grid2D.periodic((0.0, 2.0 * math.pi), (0.0, 1.0), 256, 8)
    field = analytic_states.to_wavefield(wave, grid, 0.0)
    split = energy_decompose(field, None, [1.0, 0.5])
    assert split.ke == pytest.approx(0.5, rel=1e-3)
    assert split.qpe == pytest.approx(0.0, abs=1e-6)


def test_energy_split_at_node_raises():
    state = analytic_states.gaussian_slits(1.5, 0.5, 1.0, 1.0, coefficients=(1.0, -1.0))
    with pytest.raises(NodeProximity):
        energy_decompose(state, None, [0.0])


def test_phase_time_derivative_of_stationary_state(ground_state):
    grid = Grid2D.spanning((-4.0, 4.0), (0.0, 7.0), 81, 8)
    before = analytic_states.to_wavefield(ground_state, grid, 1.0)
    after = analytic_states.to_wavefield(ground_state, grid, 1.01)
    s_t = phase_time_derivative(before, after)
    np.testing.assert_allclose(s_t.unmasked(), -0.5, atol=1e-9)


def test_hj_residual_of_stationary_state(ground_state):
    grid = Grid2D.spanning((-8.0, 8.0), (0.0, 7.0), 2049, 8)
    xx, _ = grid.mesh()
    potential = ScalarField(grid, 0.5 * xx**2)
    before = analytic_states.to_wavefield(ground_state, grid, 0.0)
    after = analytic_states.to_wavefield(ground_state, grid, 1e-3)
    residual = hj_residual(before, after, potential)
    assert residual.mask.any()
    assert residual.max_abs() < 1e-3


def test_hj_residual_rejects_wrapping_steps(ground_state):
    grid = Grid2D.spanning((-8.0, 8.0), (0.0, 7.0), 257, 8)
    xx, _ = grid.mesh()
    potential = ScalarField(grid, 0.5 * xx**2)
    before = analytic_states.to_wavefield(ground_state, grid, 0.0)
    after = analytic_states.to_wavefield(ground_state, grid, 10.0)
    with pytest.raises(PhaseWrap):
        hj_residual(before, after, potential)


def test_hj_residual_of_stationary_state_on_fine_grid(ground_state):
    # inside R >= 0.1 max R the O(dx^2) error of Q stays below dx^2 / 4
    grid = Grid2D.spanning((-4.0, 4.0), (0.0, 7.0), 8001, 8)
    xx, _ = grid.mesh()
    potential = ScalarField(grid, 0.5 * xx**2)
    before = analytic_states.to_wavefield(ground_state, grid, 0.0)
    after = analytic_states.to_wavefield(ground_state, grid, 1e-3)
    residual = hj_residual(before, after, potential, support=0.1)
    assert not residual.mask.all()
    assert residual.max_abs() < 1e-6
