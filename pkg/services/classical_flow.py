# Classical Hamiltonian flows in phase space and their symplectic checks

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

from models import FLAG_OK, FLAG_TRUNCATED, DimensionError, HamiltonianSpec

logger = logging.getLogger(__name__)

MONODROMY_STEP = 1e-6

# force(x, t) -> (force, valid) on (n, d) positions
ForceFunction = Callable[[np.ndarray, float], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class PhaseState:
    """A phase-space point z = (x, p)."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if x.ndim != 1 or x.shape != p.shape:
            raise DimensionError(f"x has shape {x.shape} but p has shape {p.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
            raise ValueError("phase state has non-finite components")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_vector(cls, z) -> "PhaseState":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size % 2:
            raise DimensionError(f"phase vector of length {z.size} is not even")
        d = z.size // 2
        return cls(z[:d], z[d:])

    @property
    def dimension(self) -> int:
        return int(self.x.size)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])


@dataclass(frozen=True)
class FlowRecord:
    """Lock-step phase-space samples of many particles.

    positions/momenta are (n_samples, n, d); after a truncation the samples
    of that particle are NaN and lengths[i] counts the valid ones.
    """

    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray
    lengths: np.ndarray
    flags: np.ndarray


def _step_count(t0: float, t1: float, dt: float) -> tuple[int, float]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(round((t1 - t0) / dt))
    if steps == 0:
        return 0, 0.0
    return steps, (t1 - t0) / steps


def kick_drift_kick(force: ForceFunction, x0: np.ndarray, p0: np.ndarray, mass,
                    t0: float, t1: float, dt: float, record_every: int = 1) -> FlowRecord:
    """Velocity-Verlet integration of dx/dt = p/m, dp/dt = F(x, t) for n particles.

    The force may depend on time; each half kick uses the force at its own
    time. Particles whose force is invalid are frozen and flagged.
    """
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    if x.ndim == 1:
        x, p = x[:, None], p[:, None]
    mass = np.broadcast_to(np.asarray(mass, dtype=float), x.shape[1:])
    n, d = x.shape
    steps, h = _step_count(t0, t1, dt)
    recorded = [k for k in range(steps + 1) if k % record_every == 0 or k == steps]
    slot = {k: i for i, k in enumerate(recorded)}

    positions = np.full((len(recorded), n, d), np.nan)
    momenta = np.full((len(recorded), n, d), np.nan)
    lengths = np.zeros(n, dtype=int)
    flags = np.full(n, FLAG_OK, dtype=int)
    alive = np.ones(n, dtype=bool)

    def evaluate(t: float) -> np.ndarray:
        """Force on live particles; particles with an undefined force are retired."""
        out = np.zeros_like(x)
        idx = np.flatnonzero(alive)
        f, valid = force(x[idx], t)
        out[idx[valid]] = f[valid]
        if not valid.all():
            lost = idx[~valid]
            logger.warning(f"kick_drift_kick: force undefined for {lost.size} particles at t={t:.4g}")
            alive[lost] = False
            flags[lost] = FLAG_TRUNCATED
        return out

    def record(k: int):
        i = slot[k]
        positions[i, alive] = x[alive]
        momenta[i, alive] = p[alive]
        lengths[alive] += 1

    current = evaluate(t0) if steps else None
    record(0)
    for k in range(1, steps + 1):
        # the closing half kick of one step and the opening one of the next share a force
        p[alive] += 0.5 * h * current[alive]
        x[alive] += h * p[alive] / mass
        current = evaluate(t0 + k * h)
        p[alive] += 0.5 * h * current[alive]
        if k in slot:
            record(k)
    times = t0 + h * np.array(recorded, dtype=float)
    return FlowRecord(times=times, positions=positions, momenta=momenta,
                      lengths=lengths, flags=flags)


def _quadratic_matrix(h: HamiltonianSpec) -> np.ndarray:
    """A with H = z^T A z / 2."""
    if h.kind == "quadratic_form":
        return np.asarray(h.matrix, dtype=float)
    d = h.dimension
    stiffness = h.mass * h.omega**2 if h.kind == "harmonic" else 0.0
    return linalg.block_diag(stiffness * np.eye(d), np.eye(d) / h.mass)


def symplectic_form(d: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] for z = (x, p) with d degrees of freedom."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def energy(h: HamiltonianSpec, z: PhaseState) -> float:
    v = z.vector()
    return float(0.5 * v @ _quadratic_matrix(h) @ v)


def _check_dimension(h: HamiltonianSpec, z0: PhaseState):
    if z0.dimension != h.dimension:
        raise DimensionError(f"phase state has {z0.dimension} degrees of freedom, "
                             f"Hamiltonian has {h.dimension}")


def hamilton_flow(h: HamiltonianSpec, z0: PhaseState, t0: float, t1: float,
                  dt: float) -> list[PhaseState]:
    """Phase-space states at every step from t0 to t1.

    free and harmonic flows are separable and use kick-drift-kick. General
    quadratic forms use the implicit midpoint rule, which for a linear flow
    is the Cayley map of dt J A / 2.
    """
    _check_dimension(h, z0)
    if h.kind != "quadratic_form":
        stiffness = h.mass * h.omega**2 if h.kind == "harmonic" else 0.0

        def force(x, t):
            return -stiffness * x, np.ones(len(x), dtype=bool)

        record = kick_drift_kick(force, z0.x[None, :], z0.p[None, :], h.mass, t0, t1, dt)
        return [PhaseState(record.positions[k, 0], record.momenta[k, 0])
                for k in range(record.times.size)]

    # quadratic_form: Cayley step (implicit midpoint), not kick-drift-kick; p and x couple
    steps, step = _step_count(t0, t1, dt)
    d2 = 2 * h.dimension
    generator = 0.5 * step * symplectic_form(h.dimension) @ _quadratic_matrix(h)
    lu = linalg.lu_factor(np.eye(d2) - generator)
    forward = np.eye(d2) + generator
    z = z0.vector()
    states = [z0]
    for _ in range(steps):
        z = linalg.lu_solve(lu, forward @ z)
        states.append(PhaseState.from_vector(z))
    return states


def monodromy(h: HamiltonianSpec, z0: PhaseState, t: float, dt: float = 1e-3) -> np.ndarray:
    """Jacobian dz(t)/dz(0) by central differences of the flow, column by column."""
    if t < 0:
        raise ValueError("t must be non-negative")
    _check_dimension(h, z0)
    d2 = 2 * z0.dimension
    if t == 0:
        return np.eye(d2)
    base = z0.vector()
    matrix = np.empty((d2, d2))
    for column in range(d2):
        shift = np.zeros(d2)
        shift[column] = MONODROMY_STEP
        plus = hamilton_flow(h, PhaseState.from_vector(base + shift), 0.0, t, dt)[-1]
        minus = hamilton_flow(h, PhaseState.from_vector(base - shift), 0.0, t, dt)[-1]
        matrix[:, column] = (plus.vector() - minus.vector()) / (2.0 * MONODROMY_STEP)
    return matrix


def symplectic_defect(m) -> float:
    """max |M^T J M - J|."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix of shape {m.shape} is not square")
    if m.shape[0] % 2:
        raise DimensionError(f"matrix dimension {m.shape[0]} is odd")
    j = symplectic_form(m.shape[0] // 2)
    return float(np.max(np.abs(m.T @ j @ m - j)))
