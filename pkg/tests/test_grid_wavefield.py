import math

import numpy as np
import pytest

from models import GaussianPacket, Grid2D, ScalarField, UnstableStep, WaveField, ZeroNorm
from services import grid_wavefield


@pytest.fixture
def periodic_grid() -> Grid2D:
    return Grid2D.periodic((-20.0, 20.0), (0.0, 8.0), 128, 8)


def test_normalize_rescales_to_unit_norm():
    grid = Grid2D.spanning((-1.0, 1.0), (-1.0, 1.0), 16, 16)
    xx, yy = grid.mesh()
    field = WaveField(grid, (2.0 + xx) * np.exp(1j * yy))
    normalized = grid_wavefield.normalize(field)
    assert normalized.norm() == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(np.angle(normalized.psi), np.angle(field.psi), atol=1e-12)


def test_normalize_zero_field_raises():
    grid = Grid2D.spanning((-1.0, 1.0), (-1.0, 1.0), 8, 8)
    with pytest.raises(ZeroNorm):
        grid_wavefield.normalize(WaveField(grid, np.zeros(grid.shape)))


def test_laplacian_is_exact_for_quadratics_including_edges():
    grid = Grid2D.spanning((-2.0, 3.0), (-1.0, 1.0), 51, 21)
    xx, yy = grid.mesh()
    lap = grid_wavefield.laplacian(ScalarField(grid, xx**2 + 3.0 * yy**2))
    np.testing.assert_allclose(lap.values, 8.0, atol=1e-8)


def test_node_mask_is_relative_to_peak():
    grid = Grid2D.spanning((0.0, 1.0), (0.0, 1.0), 8, 8)
    psi = np.full(grid.shape, 1.0 + 0j)
    psi[2, 3] = 1e-9
    mask = grid_wavefield.node_mask(WaveField(grid, 5.0 * psi), node_floor=1e-8)
    assert mask.sum() == 1 and mask[2, 3]


def test_boundary_band_width():
    grid = Grid2D.spanning((0.0, 1.0), (0.0, 1.0), 20, 30)
    band = grid_wavefield.boundary_band(grid, 0.1)
    assert band[:2].all() and band[-2:].all()
    assert band[:, :3].all() and band[:, -3:].all()
    assert not band[2:-2, 3:-3].any()


def test_absorbing_mask_profile(periodic_grid):
    mask = grid_wavefield.absorbing_mask(periodic_grid, 0.1)
    assert mask.min() >= 0.0 and mask.max() <= 1.0
    assert mask[64, 4] == pytest.approx(1.0)
    assert mask[0, 4] < 0.05


def test_log_derivative_recovers_wavenumber(line_grid):
    packet = GaussianPacket(center=(0.5,), sigma0=1.0, k=(1.5,))
    field = grid_wavefield.gaussian_field(line_grid, packet)
    grad_r, grad_s = grid_wavefield.log_derivative(field)
    i = np.argmin(np.abs(line_grid.x - 0.5))
    assert grad_s.x[i, 4] == pytest.approx(1.5, abs=1e-3)
    assert grad_s.y[i, 4] == pytest.approx(0.0, abs=1e-9)
    # grad(R)/R = -(x - c) / (2 sigma^2)
    j = np.argmin(np.abs(line_grid.x - 2.5))
    assert grad_r.x[j, 4] == pytest.approx(-(line_grid.x[j] - 0.5) / 2.0, abs=1e-3)


def test_probability_current_of_plane_wave():
    grid = Grid2D.periodic((0.0, 10.0), (0.0, 10.0), 64, 16)
    k = 2.0 * math.pi * 2 / 10.0
    field = grid_wavefield.plane_wave_field(grid, (k, 0.0))
    current = grid_wavefield.probability_current(field)
    expected = k * np.abs(field.psi)**2
    # central differences lose (k dx)^2 / 6, one-sided edges gain (k dx)^2 / 3
    kdx2 = (k * grid.dx)**2
    np.testing.assert_allclose(current.x[1:-1], expected[1:-1], rtol=1e-2)
    np.testing.assert_allclose(current.x[[0, -1]], expected[[0, -1]], rtol=0.5 * kdx2)
    np.testing.assert_allclose(current.y, 0.0, atol=1e-12)


def test_laplacian_converges_at_second_order():
    errors = []
    for n in (33, 65):
        grid = Grid2D.spanning((0.0, 2.0 * math.pi), (0.0, 1.0), n, 6)
        xx, _ = grid.mesh()
        lap = grid_wavefield.laplacian(ScalarField(grid, np.sin(xx)))
        errors.append(np.abs(lap.values + np.sin(xx))[1:-1].max())
    assert 3.6 < errors[0] / errors[1] < 4.4


def test_propagate_is_linear(periodic_grid):
    first = grid_wavefield.gaussian_field(periodic_grid, GaussianPacket(center=(-3.0,), sigma0=1.0, k=(1.0,)))
    second = grid_wavefield.gaussian_field(periodic_grid, GaussianPacket(center=(4.0,), sigma0=2.0, k=(-0.5,)))
    xx, _ = periodic_grid.mesh()
    potential = ScalarField(periodic_grid, 0.01 * xx**2)
    a, b = 0.3 - 0.7j, 1.2 + 0.4j
    mixed = WaveField(periodic_grid, a * first.psi + b * second.psi)

    def evolve(field):
        return grid_wavefield.propagate(field, potential, 0.05, 40).psi

    np.testing.assert_allclose(evolve(mixed), a * evolve(first) + b * evolve(second), atol=1e-12)


def test_plane_wave_phase_advances_by_kinetic_energy_per_step():
    grid = Grid2D.periodic((0.0, 10.0), (0.0, 10.0), 64, 16)
    k, dt = 2.0 * math.pi * 3 / 10.0, 0.05
    field = grid_wavefield.plane_wave_field(grid, (k, 0.0))
    stepped = grid_wavefield.propagate(field, None, dt, 1)
    np.testing.assert_allclose(np.abs(stepped.psi), np.abs(field.psi), atol=1e-12)
    np.testing.assert_allclose(stepped.psi / field.psi, np.exp(-0.5j * k * k * dt), atol=1e-12)


def test_propagate_matches_free_spreading(periodic_grid):
    packet = GaussianPacket(center=(-2.0,), sigma0=1.0, k=(1.0,))
    start = grid_wavefield.gaussian_field(periodic_grid, packet)
    evolved = grid_wavefield.propagate(start, None, 0.01, 100)
    exact = grid_wavefield.gaussian_field(periodic_grid, packet, t=1.0)
    assert evolved.time == pytest.approx(1.0)
    np.testing.assert_allclose(evolved.psi, exact.psi, atol=1e-10)


def test_propagate_conserves_norm_in_a_potential(periodic_grid):
    packet = GaussianPacket(center=(1.0,), sigma0=1.5, k=(0.5,))
    start = grid_wavefield.gaussian_field(periodic_grid, packet)
    xx, _ = periodic_grid.mesh()
    potential = ScalarField(periodic_grid, 0.01 * xx**2)
    evolved = grid_wavefield.propagate(start, potential, 0.05, 200)
    assert evolved.norm() == pytest.approx(start.norm(), abs=1e-10)


def test_propagate_rejects_steps_beyond_bound(periodic_grid):
    start = grid_wavefield.gaussian_field(periodic_grid, GaussianPacket(center=(0.0,), sigma0=1.0, k=(0.0,)))
    xx, _ = periodic_grid.mesh()
    potential = ScalarField(periodic_grid, 10.0 * xx**2)
    bound = grid_wavefield.dt_max(periodic_grid, potential)
    with pytest.raises(UnstableStep):
        grid_wavefield.propagate(start, potential, 2.0 * bound, 1)
    assert grid_wavefield.propagate(start, potential, 2.0 * bound, 0) is start


def test_absorbing_boundary_removes_outgoing_norm(periodic_grid):
    packet = GaussianPacket(center=(12.0,), sigma0=1.0, k=(4.0,))
    start = grid_wavefield.gaussian_field(periodic_grid, packet)
    evolved = grid_wavefield.propagate(start, None, 0.01, 300, absorbing=True)
    assert evolved.norm() < 0.5 * start.norm()


def test_continuity_residual_is_small_for_free_motion():
    grid = Grid2D.periodic((-12.0, 12.0), (-12.0, 12.0), 128, 128)
    packet = GaussianPacket(center=(0.0, 0.0), sigma0=1.5, k=(0.3, 0.2))
    before = grid_wavefield.gaussian_field(grid, packet, t=0.5)
    after = grid_wavefield.propagate(before, None, 1e-3, 1)
    residual = grid_wavefield.continuity_residual(before, after)
    assert residual.mask.any()
    assert residual.max_abs() < 1e-3


def test_continuity_residual_needs_ordered_snapshots(periodic_grid):
    field = grid_wavefield.gaussian_field(periodic_grid, GaussianPacket(center=(0.0,), sigma0=1.0, k=(0.0,)))
    with pytest.raises(ValueError):
        grid_wavefield.continuity_residual(field, field)
