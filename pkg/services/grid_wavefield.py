# Grid wave functions: polar-decomposition derivatives and split-operator propagation

import logging
import math
from typing import Optional

import numpy as np

from config import settings
from models import (GaussianPacket, Grid2D, PlaneWave, ScalarField, UnstableStep,
                    VectorField, WaveField, ZeroNorm)
from services.analytic_states import AnalyticState, to_wavefield

logger = logging.getLogger(__name__)

ZERO_NORM_THRESHOLD = 1e-300


def normalize(field: WaveField) -> WaveField:
    """Rescale so that sum |psi|^2 dx dy = 1; phases are untouched."""
    norm = field.norm()
    if norm < ZERO_NORM_THRESHOLD:
        raise ZeroNorm(f"sum |psi|^2 dx dy = {norm:.3e}")
    return field.with_psi(field.psi / math.sqrt(norm))


def amplitude(field: WaveField) -> ScalarField:
    return ScalarField(field.grid, np.abs(field.psi))


def node_mask(field: WaveField, node_floor: Optional[float] = None) -> np.ndarray:
    """True where |psi| < node_floor * max |psi|."""
    floor = settings.node_floor if node_floor is None else node_floor
    modulus = np.abs(field.psi)
    peak = modulus.max()
    if peak == 0.0:
        return np.ones(field.grid.shape, dtype=bool)
    return modulus < floor * peak


def boundary_band(grid: Grid2D, fraction: Optional[float] = None) -> np.ndarray:
    """True on the outer `fraction` of the grid along either axis."""
    fraction = settings.absorbing_fraction if fraction is None else fraction
    bx = int(math.ceil(fraction * grid.nx))
    by = int(math.ceil(fraction * grid.ny))
    band = np.zeros(grid.shape, dtype=bool)
    if bx:
        band[:bx, :] = True
        band[-bx:, :] = True
    if by:
        band[:, :by] = True
        band[:, -by:] = True
    return band


def absorbing_mask(grid: Grid2D, fraction: Optional[float] = None) -> np.ndarray:
    """Multiplicative cos^2 ramp: 1 in the interior, falling to 0 at the edge."""
    fraction = settings.absorbing_fraction if fraction is None else fraction

    def ramp(n: int) -> np.ndarray:
        width = int(math.ceil(fraction * n))
        profile = np.ones(n)
        if width == 0:
            return profile
        # distance into the band, 0 at the inner edge, 1 at the outer edge
        s = (width - np.arange(width)) / width
        profile[:width] = np.cos(0.5 * math.pi * s)**2
        profile[-width:] = profile[:width][::-1]
        return profile

    return np.outer(ramp(grid.nx), ramp(grid.ny))


def _gradient(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Central differences inside, second-order one-sided at the edges."""
    gx, gy = np.gradient(values, grid.dx, grid.dy, edge_order=2)
    return gx, gy


def _second_difference(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = f[2:] - 2.0 * f[1:-1] + f[:-2]
    out[0] = 2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]
    out[-1] = 2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]
    return np.moveaxis(out / (h * h), 0, axis)


def laplacian(field: ScalarField) -> ScalarField:
    """5-point Laplacian, O(dx^2); the input mask is carried over."""
    grid = field.grid
    lap = (_second_difference(field.values, grid.dx, 0) +
           _second_difference(field.values, grid.dy, 1))
    return ScalarField(grid, lap, field.mask)


def log_derivative(field: WaveField,
                   node_floor: Optional[float] = None
                   ) -> tuple[VectorField, VectorField]:
    """grad(R)/R and grad(S) from grad(psi)/psi = grad(R)/R + i grad(S)/hbar.

    Works on psi directly, so no phase unwrapping is needed. Points under
    the node floor are masked.
    """
    grid = field.grid
    mask = node_mask(field, node_floor)
    gx, gy = _gradient(field.psi, grid)
    safe = np.where(mask, 1.0, field.psi)
    qx, qy = gx / safe, gy / safe
    grad_r_over_r = VectorField(grid, qx.real, qy.real, mask)
    grad_s = VectorField(grid, field.hbar * qx.imag, field.hbar * qy.imag, mask)
    return grad_r_over_r, grad_s


def probability_current(field: WaveField) -> VectorField:
    """j = (hbar/m) Im(conj(psi) grad psi); defined at nodes as well."""
    gx, gy = _gradient(field.psi, field.grid)
    scale = field.hbar / field.mass
    conj = np.conj(field.psi)
    return VectorField(field.grid, scale * (conj * gx).imag, scale * (conj * gy).imag)


def _potential_values(grid: Grid2D, potential: Optional[ScalarField]) -> np.ndarray:
    if potential is None:
        return np.zeros(grid.shape)
    if potential.grid != grid:
        raise ValueError("potential lives on a different grid")
    return potential.values


def dt_max(grid: Grid2D, potential: Optional[ScalarField] = None,
           hbar: float = 1.0, mass: float = 1.0) -> float:
    """Step bound for propagate().

    The kinetic drift is exact in the spectral domain; the bound keeps the
    fastest resolved mode (group velocity hbar k_max / m) from crossing the
    periodic box in one step along either axis, and keeps the phase spread
    of a potential half kick below pi.
    """
    bounds = []
    for n, h in ((grid.nx, grid.dx), (grid.ny, grid.dy)):
        k_max = math.pi / h
        bounds.append(n * h * mass / (hbar * k_max))
    values = _potential_values(grid, potential)
    spread = float(values.max() - values.min())
    if spread > 0:
        bounds.append(math.pi * hbar / spread)
    return min(bounds)


def propagate(field: WaveField, potential: Optional[ScalarField], dt: float,
              steps: int, absorbing: bool = False,
              fraction: Optional[float] = None) -> WaveField:
    """Strang split-operator evolution under -hbar^2/2m lap + V.

    Half kick, spectral drift with periodic boundaries, half kick. Adjacent
    half kicks are merged. With `absorbing`, the cos^2 edge mask is applied
    after every step.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if steps == 0:
        return field
    if dt <= 0:
        raise UnstableStep(f"dt = {dt} is not positive")
    grid = field.grid
    values = _potential_values(grid, potential)
    bound = dt_max(grid, potential, field.hbar, field.mass)
    if dt > bound:
        raise UnstableStep(f"dt = {dt:.3e} exceeds dt_max = {bound:.3e}")

    kx = 2.0 * math.pi * np.fft.fftfreq(grid.nx, grid.dx)
    ky = 2.0 * math.pi * np.fft.fftfreq(grid.ny, grid.dy)
    k2 = kx[:, None]**2 + ky[None, :]**2
    drift = np.exp(-0.5j * field.hbar * k2 * dt / field.mass)
    half_kick = np.exp(-0.5j * values * dt / field.hbar)
    full_kick = half_kick * half_kick
    mask = absorbing_mask(grid, fraction) if absorbing else None

    logger.debug(f"propagate: {steps} steps of dt={dt:.3e} on {grid.nx}x{grid.ny}")
    psi = half_kick * field.psi
    for step in range(steps):
        psi = np.fft.ifft2(drift * np.fft.fft2(psi))
        psi = (full_kick if step < steps - 1 else half_kick) * psi
        if mask is not None:
            psi = psi * mask
    return field.with_psi(psi, time=field.time + steps * dt)


def support_mask(field: WaveField, support: Optional[float] = None) -> np.ndarray:
    """True outside the packet support R >= support * max R."""
    level = settings.residual_support if support is None else support
    return node_mask(field, level)


def continuity_residual(before: WaveField, after: WaveField,
                        fraction: Optional[float] = None,
                        support: Optional[float] = None) -> ScalarField:
    """d(rho)/dt + div(j) between two snapshots of one propagation.

    Forward difference in time, current averaged over both snapshots, so
    the residual is centred at the midpoint.
    """
    dt = after.time - before.time
    if dt <= 0:
        raise ValueError("snapshots must be ordered in time")
    grid = before.grid
    rho_t = (np.abs(after.psi)**2 - np.abs(before.psi)**2) / dt
    j0, j1 = probability_current(before), probability_current(after)
    jx = 0.5 * (j0.x + j1.x)
    jy = 0.5 * (j0.y + j1.y)
    div = np.gradient(jx, grid.dx, axis=0, edge_order=2) + \
        np.gradient(jy, grid.dy, axis=1, edge_order=2)
    mask = (boundary_band(grid, fraction) | support_mask(before, support) |
            support_mask(after, support))
    return ScalarField(grid, rho_t + div, mask)


def gaussian_field(grid: Grid2D, packet: GaussianPacket, t: float = 0.0) -> WaveField:
    """Normalized grid sample of a free packet; 1D packets are constant along y."""
    return normalize(to_wavefield(AnalyticState.single(packet), grid, t))


def plane_wave_field(grid: Grid2D, k: tuple[float, float], hbar: float = 1.0,
                     mass: float = 1.0) -> WaveField:
    """exp(i k.x) normalized over the grid.

    On a periodic grid, k should be a lattice mode 2 pi n / L for the drift
    to be exact.
    """
    wave = PlaneWave(k=tuple(k), hbar=hbar, mass=mass)
    return normalize(to_wavefield(AnalyticState.single(wave), grid, 0.0))
