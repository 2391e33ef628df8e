# Trajectory ensembles under the guidance equation

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RegularGridInterpolator
from scipy.stats import kstest

from config import settings
from models import FLAG_OK, FLAG_TRUNCATED, Ensemble, ScalarField, WaveField
from services import analytic_states
from services.grid_wavefield import boundary_band, log_derivative, node_mask, propagate
from services.quantum_potential import q_field

logger = logging.getLogger(__name__)

# Trajectory ids are sampled in blocks of this size, one random stream per block
SAMPLE_BLOCK = 1024
MAX_HALVINGS = 8


class VelocityProvider(Protocol):
    dimension: int

    def velocity(self, points: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(n, d) velocities and an (n,) validity mask."""
        ...

    def diagnostics(self, points: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(q, ke) at the points."""
        ...


class AnalyticVelocityProvider:
    """Exact guidance velocity of an analytic state."""

    def __init__(self, state, node_floor: Optional[float] = None):
        self.state = state
        self.node_floor = node_floor
        self.dimension = state.dimension

    def velocity(self, points, t):
        return analytic_states.velocity_field(self.state, points, t, self.node_floor)

    def diagnostics(self, points, t):
        q, _ = analytic_states.potential_field(self.state, points, t, self.node_floor)
        ke, _ = analytic_states.kinetic_field(self.state, points, t, self.node_floor)
        return q, ke


class ScaledVelocity:
    """Multiplies another provider's velocity by a constant factor."""

    def __init__(self, provider: VelocityProvider, factor: float):
        self.provider = provider
        self.factor = factor
        self.dimension = provider.dimension

    def velocity(self, points, t):
        v, valid = self.provider.velocity(points, t)
        return self.factor * v, valid

    def diagnostics(self, points, t):
        return self.provider.diagnostics(points, t)


@dataclass(frozen=True)
class _Snapshot:
    time: float
    vx: RegularGridInterpolator
    vy: RegularGridInterpolator
    q: RegularGridInterpolator
    ke: RegularGridInterpolator
    blocked: RegularGridInterpolator


class GridVelocityProvider:
    """Velocity from WaveField snapshots: bilinear in space, linear in time.

    Points in the boundary band, outside the grid, or in a cell touching a
    node-masked point are invalid.
    """

    dimension = 2

    def __init__(self, snapshots: Sequence[WaveField], node_floor: Optional[float] = None,
                 fraction: Optional[float] = None):
        if not snapshots:
            raise ValueError("at least one snapshot is required")
        times = np.array([s.time for s in snapshots])
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("snapshots must be ordered in time")
        self.times = times
        self._snapshots = [self._prepare(s, node_floor, fraction) for s in snapshots]

    @classmethod
    def from_propagation(cls, field: WaveField, potential: Optional[ScalarField],
                         dt: float, steps: int, every: int = 1, absorbing: bool = True,
                         **kwargs) -> "GridVelocityProvider":
        snapshots = [field]
        current = field
        for _ in range(every, steps + 1, every):
            current = propagate(current, potential, dt, every, absorbing=absorbing)
            snapshots.append(current)
        return cls(snapshots, **kwargs)

    @staticmethod
    def _prepare(field: WaveField, node_floor, fraction) -> _Snapshot:
        grid = field.grid
        axes = (grid.x, grid.y)
        _, grad_s = log_derivative(field, node_floor)
        q = q_field(field, node_floor)
        blocked = node_mask(field, node_floor) | boundary_band(grid, fraction)

        def interp(values):
            return RegularGridInterpolator(axes, values, bounds_error=False,
                                           fill_value=np.nan)

        return _Snapshot(time=field.time,
                         vx=interp(grad_s.x / field.mass),
                         vy=interp(grad_s.y / field.mass),
                         q=interp(q.values),
                         ke=interp((grad_s.x**2 + grad_s.y**2) / (2.0 * field.mass)),
                         blocked=interp(blocked.astype(float)))

    def _weights(self, t: float):
        if self.times.size == 1:
            return [(self._snapshots[0], 1.0)]
        k = int(np.clip(np.searchsorted(self.times, t) - 1, 0, self.times.size - 2))
        w = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        w = float(np.clip(w, 0.0, 1.0))
        return [(self._snapshots[k], 1.0 - w), (self._snapshots[k + 1], w)]

    def _blend(self, name: str, points: np.ndarray, t: float) -> np.ndarray:
        return sum(w * getattr(s, name)(points) for s, w in self._weights(t) if w > 0)

    def velocity(self, points, t):
        vx = self._blend("vx", points, t)
        vy = self._blend("vy", points, t)
        blocked = self._blend("blocked", points, t)
        valid = np.isfinite(vx) & np.isfinite(vy) & (np.nan_to_num(blocked, nan=1.0) == 0)
        v = np.stack([vx, vy], axis=1)
        return np.where(valid[:, None], v, 0.0), valid

    def diagnostics(self, points, t):
        q = np.nan_to_num(self._blend("q", points, t))
        ke = np.nan_to_num(self._blend("ke", points, t))
        return q, ke


def as_provider(source) -> VelocityProvider:
    if hasattr(source, "velocity") and hasattr(source, "diagnostics"):
        return source
    return AnalyticVelocityProvider(source)


def sample_initial(state, n: int, seed: int, t: float = 0.0,
                   box: Optional[np.ndarray] = None) -> np.ndarray:
    """n points drawn i.i.d. from |psi(t)|^2 by rejection against a box bound.

    Trajectory i draws from block i // SAMPLE_BLOCK, seeded by
    SeedSequence(seed, spawn_key=(block,)); every block is filled completely,
    so point i does not depend on n.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    d = state.dimension
    if n == 0:
        return np.empty((0, d))
    box = state.bounding_box(t) if box is None else np.asarray(box, dtype=float)
    if box is None:
        raise ValueError("state has no natural bounding box; pass box")
    lo, hi = box[:, 0], box[:, 1]
    ceiling = state.amplitude_bound(t)**2

    blocks = []
    for block in range(math.ceil(n / SAMPLE_BLOCK)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
        accepted, count = [], 0
        while count < SAMPLE_BLOCK:
            candidates = lo + (hi - lo) * rng.random((8 * SAMPLE_BLOCK, d))
            heights = ceiling * rng.random(8 * SAMPLE_BLOCK)
            density = np.abs(analytic_states.evaluate(state, candidates, t))**2
            kept = candidates[heights < density]
            accepted.append(kept)
            count += len(kept)
        blocks.append(np.concatenate(accepted)[:SAMPLE_BLOCK])
    return np.concatenate(blocks)[:n]


def _rk4(provider: VelocityProvider, x: np.ndarray, t: float, h: float):
    k1, ok1 = provider.velocity(x, t)
    k2, ok2 = provider.velocity(x + 0.5 * h * k1, t + 0.5 * h)
    k3, ok3 = provider.velocity(x + 0.5 * h * k2, t + 0.5 * h)
    k4, ok4 = provider.velocity(x + h * k3, t + h)
    x_new = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return x_new, ok1 & ok2 & ok3 & ok4


def _substeps(provider, x: np.ndarray, t: float, h: float, pieces: int):
    ok = np.ones(len(x), dtype=bool)
    step = h / pieces
    for m in range(pieces):
        x, ok_m = _rk4(provider, x, t + m * step, step)
        ok &= ok_m
    return x, ok


def integrate(initials: np.ndarray, velocity_provider, t0: float, t1: float, dt: float,
              record_every: int = 1, seed: int = 0, source: str = "") -> Ensemble:
    """Classic RK4 on every trajectory in lock step.

    The interval is split into round((t1 - t0) / dt) equal steps. A step that
    meets a node is retried with 2, 4, ... 2**8 substeps; a trajectory that
    still fails is truncated and flagged.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    provider = as_provider(velocity_provider)
    if settings.velocity_bias != 1.0:
        logger.warning(f"Guidance velocities scaled by {settings.velocity_bias} (test hook)")
        provider = ScaledVelocity(provider, settings.velocity_bias)
    x = np.array(initials, dtype=float).reshape(-1, provider.dimension)
    n, d = x.shape
    n_steps = max(1, int(round((t1 - t0) / dt)))
    h = (t1 - t0) / n_steps
    recorded = [k for k in range(n_steps + 1) if k % record_every == 0 or k == n_steps]
    slot = {k: i for i, k in enumerate(recorded)}

    times = t0 + h * np.array(recorded, dtype=float)
    positions = np.full((len(recorded), n, d), np.nan)
    velocities = np.full((len(recorded), n, d), np.nan)
    q = np.full((len(recorded), n), np.nan)
    ke = np.full((len(recorded), n), np.nan)
    lengths = np.zeros(n, dtype=int)
    flags = np.full(n, FLAG_OK, dtype=int)
    alive = np.ones(n, dtype=bool)

    def record(k: int, t: float):
        idx = np.flatnonzero(alive)
        v, valid = provider.velocity(x[idx], t)
        bad = idx[~valid]
        if bad.size:
            alive[bad] = False
            flags[bad] = FLAG_TRUNCATED
        idx, v = idx[valid], v[valid]
        qs, kes = provider.diagnostics(x[idx], t)
        i = slot[k]
        positions[i, idx] = x[idx]
        velocities[i, idx] = v
        q[i, idx] = qs
        ke[i, idx] = kes
        lengths[idx] += 1

    record(0, t0)
    logger.debug(f"integrate: {n} trajectories, {n_steps} steps of {h:.3e}")
    for k in range(1, n_steps + 1):
        t = t0 + (k - 1) * h
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        x_new, ok = _rk4(provider, x[idx], t, h)
        pending = idx[~ok]
        for halving in range(1, MAX_HALVINGS + 1):
            if pending.size == 0:
                break
            x_sub, ok_sub = _substeps(provider, x[pending], t, h, 2**halving)
            x_new[np.searchsorted(idx, pending[ok_sub])] = x_sub[ok_sub]
            pending = pending[~ok_sub]
        if pending.size:
            logger.warning(f"Truncating {pending.size} trajectories near a node at t={t:.4g}")
            alive[pending] = False
            flags[pending] = FLAG_TRUNCATED
        moved = alive[idx]
        x[idx[moved]] = x_new[moved]
        if k in slot:
            record(k, t0 + k * h)

    truncated = int(np.count_nonzero(flags))
    if truncated:
        logger.info(f"{truncated} of {n} trajectories truncated")
    return Ensemble(times=times, positions=positions, velocities=velocities, q=q, ke=ke,
                    lengths=lengths, flags=flags, seed=seed, source=source)


@dataclass(frozen=True)
class NoCrossingReport:
    ok: bool
    pair: Optional[tuple[int, int]] = None
    time: Optional[float] = None
    violations: int = 0


def check_no_crossing(ensemble: Ensemble, axis: int = 0) -> NoCrossingReport:
    """Check that the initial order along `axis` holds at every sample time."""
    if ensemble.size < 2:
        return NoCrossingReport(ok=True)
    order = np.argsort(ensemble.positions[0, :, axis], kind="stable")
    first = None
    violations = 0
    for k, t in enumerate(ensemble.times):
        live = order[ensemble.alive_at(k)[order]]
        xs = ensemble.positions[k, live, axis]
        bad = np.flatnonzero(np.diff(xs) <= 0)
        if bad.size:
            violations += bad.size
            if first is None:
                first = ((int(live[bad[0]]), int(live[bad[0] + 1])), float(t))
    if first is None:
        return NoCrossingReport(ok=True)
    return NoCrossingReport(ok=False, pair=first[0], time=first[1], violations=violations)


def count_diagonal_crossings(ensemble: Ensemble, axes: tuple[int, int] = (0, 1)) -> int:
    """Trajectories whose sign of x_a - x_b changes or vanishes."""
    a, b = axes
    gap = ensemble.positions[:, :, a] - ensemble.positions[:, :, b]
    count = 0
    for i in range(ensemble.size):
        signs = np.sign(gap[:ensemble.lengths[i], i])
        if signs.size and (np.any(signs == 0) or np.any(signs != signs[0])):
            count += 1
    return count


def marginal_cdf(state, t: float, axis: int = 0, points: int = 4001,
                 nsigma: float = 10.0) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of the |psi(t)|^2 marginal along `axis`, by trapezoid quadrature."""
    box = state.bounding_box(t, nsigma)
    if box is None:
        raise ValueError("state has no natural bounding box")
    line = np.linspace(box[axis, 0], box[axis, 1], points)
    if state.dimension == 1:
        density = np.abs(analytic_states.evaluate(state, line[:, None], t))**2
    elif state.dimension == 2:
        other = 1 - axis
        across = np.linspace(box[other, 0], box[other, 1], 801)
        grid_a, grid_b = np.meshgrid(line, across, indexing="ij")
        coords = [None, None]
        coords[axis], coords[other] = grid_a.ravel(), grid_b.ravel()
        psi = analytic_states.evaluate(state, np.stack(coords, axis=1), t)
        density = np.trapezoid(np.abs(psi.reshape(grid_a.shape))**2, across, axis=1)
    else:
        raise ValueError("marginals are available for 1D and 2D configurations")
    cdf = cumulative_trapezoid(density, line, initial=0.0)
    cdf /= cdf[-1]
    return lambda x: np.interp(x, line, cdf, left=0.0, right=1.0)


def equivariance_distance(ensemble: Ensemble, state, t: float, axis: int = 0) -> float:
    """Kolmogorov-Smirnov distance between the ensemble marginal and |psi(t)|^2."""
    k = ensemble.sample_index(t)
    samples = ensemble.positions[k, ensemble.alive_at(k), axis]
    cdf = marginal_cdf(state, float(ensemble.times[k]), axis)
    return float(kstest(samples, cdf).statistic)
