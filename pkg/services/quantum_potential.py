# Quantum potential, the KE/QPE energy split and quantum Hamilton-Jacobi residuals

import logging
import math
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from models import EnergySplit, NodeProximity, PhaseWrap, ScalarField, WaveField
from services import analytic_states
from services.grid_wavefield import (amplitude, boundary_band, laplacian,
                                     log_derivative, node_mask, support_mask)

logger = logging.getLogger(__name__)

PotentialLike = Union[None, float, ScalarField, Callable[[np.ndarray], np.ndarray]]


def q_field(field: WaveField, node_floor: Optional[float] = None) -> ScalarField:
    """Q = -(hbar^2 / 2m) lap(R) / R on the grid, masked under the node floor."""
    r = amplitude(field)
    mask = node_mask(field, node_floor)
    lap = laplacian(r).values
    safe = np.where(mask, 1.0, r.values)
    q = -(field.hbar**2 / (2.0 * field.mass)) * lap / safe
    logger.debug(f"q_field: {int(mask.sum())} of {mask.size} points masked")
    return ScalarField(field.grid, q, mask)


def _potential_on_grid(field: WaveField, potential: PotentialLike) -> np.ndarray:
    if potential is None:
        return np.zeros(field.grid.shape)
    if isinstance(potential, ScalarField):
        if potential.grid != field.grid:
            raise ValueError("potential lives on a different grid")
        return potential.values
    if callable(potential):
        xx, yy = field.grid.mesh()
        points = np.stack([xx.ravel(), yy.ravel()], axis=1)
        return np.asarray(potential(points), dtype=float).reshape(field.grid.shape)
    return np.full(field.grid.shape, float(potential))


def _potential_at(potential: PotentialLike, points: np.ndarray) -> np.ndarray:
    if potential is None:
        return np.zeros(len(points))
    if isinstance(potential, ScalarField):
        grid = potential.grid
        interp = RegularGridInterpolator((grid.x, grid.y), potential.values)
        return interp(points[:, :2])
    if callable(potential):
        return np.asarray(potential(points), dtype=float).reshape(len(points))
    return np.full(len(points), float(potential))


def _interpolate(field: WaveField, values: np.ndarray, mask: np.ndarray,
                 point: np.ndarray) -> float:
    grid = field.grid
    x, y = float(point[0]), float(point[1])
    fi = (x - grid.x0) / grid.dx
    fj = (y - grid.y0) / grid.dy
    if not (0 <= fi <= grid.nx - 1 and 0 <= fj <= grid.ny - 1):
        raise ValueError(f"point ({x}, {y}) is outside the grid")
    i0, j0 = min(int(fi), grid.nx - 2), min(int(fj), grid.ny - 2)
    if mask[i0:i0 + 2, j0:j0 + 2].any():
        raise NodeProximity(f"grid cell at ({x}, {y}) touches a masked point")
    interp = RegularGridInterpolator((grid.x, grid.y), values)
    return float(interp([[x, y]])[0])


def energy_decompose(source, potential: PotentialLike, x, t: float = 0.0,
                     node_floor: Optional[float] = None) -> EnergySplit:
    """Split E = |grad S|^2/2m + Q + V at one point.

    `source` is an analytic state (exact derivatives, evaluated at t) or a
    WaveField (grid derivatives, bilinear interpolation; t is its own time).
    """
    if isinstance(source, WaveField):
        point = np.asarray(x, dtype=float).reshape(2)
        _, grad_s = log_derivative(source, node_floor)
        ke_grid = (grad_s.x**2 + grad_s.y**2) / (2.0 * source.mass)
        q = q_field(source, node_floor)
        ke = _interpolate(source, ke_grid, grad_s.mask, point)
        qpe = _interpolate(source, q.values, q.mask, point)
        v = float(_potential_at(potential, point[None, :])[0])
        return EnergySplit(ke=ke, qpe=qpe, v=v)

    points, _ = analytic_states.as_points(source, x)
    ke, ok_ke = analytic_states.kinetic_field(source, points, t, node_floor)
    qpe, ok_q = analytic_states.potential_field(source, points, t, node_floor)
    if not (ok_ke[0] and ok_q[0]):
        raise NodeProximity(f"|psi| below node floor at x={points[0]}, t={t}")
    v = float(_potential_at(potential, points)[0])
    return EnergySplit(ke=float(ke[0]), qpe=float(qpe[0]), v=v)


def phase_time_derivative(before: WaveField, after: WaveField,
                          dt: Optional[float] = None,
                          node_floor: Optional[float] = None) -> ScalarField:
    """dS/dt from arg(psi(t+dt) / psi(t)), branch-safe while |dS| dt / hbar < pi."""
    dt = after.time - before.time if dt is None else dt
    if dt <= 0:
        raise ValueError("snapshots must be ordered in time")
    mask = node_mask(before, node_floor) | node_mask(after, node_floor)
    rotation = np.angle(after.psi * np.conj(before.psi))
    return ScalarField(before.grid, before.hbar * rotation / dt, mask)


def hj_residual(before: WaveField, after: WaveField, potential: PotentialLike,
                dt: Optional[float] = None,
                node_floor: Optional[float] = None,
                fraction: Optional[float] = None,
                support: Optional[float] = None) -> ScalarField:
    """Pointwise dS/dt + |grad S|^2/2m + Q + V between two snapshots.

    Spatial terms are averaged over both snapshots, so the residual is
    centred at the midpoint. Boundary band and low-amplitude tails are masked.
    """
    s_t = phase_time_derivative(before, after, dt, node_floor)
    dt = after.time - before.time if dt is None else dt
    _, grad0 = log_derivative(before, node_floor)
    _, grad1 = log_derivative(after, node_floor)
    ke = 0.25 / before.mass * (grad0.x**2 + grad0.y**2 + grad1.x**2 + grad1.y**2)
    q = 0.5 * (q_field(before, node_floor).values + q_field(after, node_floor).values)
    v = _potential_on_grid(before, potential)

    mask = (s_t.mask | boundary_band(before.grid, fraction) |
            support_mask(before, support) | support_mask(after, support))
    hamiltonian = ke + q + v
    predicted = dt * np.abs(np.where(mask, 0.0, hamiltonian)) / before.hbar
    if predicted.max() >= math.pi:
        raise PhaseWrap(f"predicted phase change {predicted.max():.3f} rad per step; "
                        "reduce dt")
    return ScalarField(before.grid, s_t.values + hamiltonian, mask)
