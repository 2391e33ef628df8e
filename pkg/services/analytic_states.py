# Closed-form wave functions with exact derivatives

import cmath
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from config import settings
from models import (ConfigError, DimensionError, GaussianPacket, Grid2D, NodeProximity,
                    PlaneWave, WaveField)
from utils.config_file import parse_key_values, read_config_text

logger = logging.getLogger(__name__)

Packet = Union[GaussianPacket, PlaneWave]

# Relative step for quantum_force's central difference of Q
FORCE_STEP = 1e-5

# Below this incoherent magnitude psi is subnormal or nearly so and quotients lose precision
SCALE_FLOOR = 1e-280


@dataclass(frozen=True)
class Jet:
    """psi with its gradient and unmixed second derivatives at n points."""

    psi: np.ndarray  # (n,)
    grad: np.ndarray  # (n, d)
    hess: np.ndarray  # (n, d): d^2 psi / dx_i^2
    scale: np.ndarray  # (n,): incoherent magnitude, the node test reference


def _packet_jet(packet: Packet, points: np.ndarray, t: float):
    k = np.asarray(packet.k, dtype=float)
    phase = points @ k - packet.hbar * float(k @ k) * t / (2.0 * packet.mass)
    if isinstance(packet, PlaneWave):
        psi = np.exp(1j * phase)
        g = np.broadcast_to(1j * k, points.shape)
        return psi, psi[:, None] * g, psi[:, None] * (g * g)

    d = packet.dimension
    s2 = packet.sigma0**2
    tau = packet.hbar * t / (2.0 * packet.mass)
    alpha = complex(s2, tau)  # sigma0 * sigma_t
    a = 1.0 / (4.0 * alpha)
    prefactor = (2.0 * math.pi * s2)**(-d / 4.0) * (1.0 + 1j * tau / s2)**(-d / 2.0)
    drift = packet.hbar * k * t / packet.mass
    u = points - np.asarray(packet.center) - drift
    psi = prefactor * np.exp(-a * np.sum(u * u, axis=1) + 1j * phase)
    g = -2.0 * a * u + 1j * k
    return psi, psi[:, None] * g, psi[:, None] * (g * g - 2.0 * a)


def _packet_peak(packet: Packet, t: float) -> float:
    if isinstance(packet, PlaneWave):
        return 1.0
    s2 = packet.sigma0**2
    tau = packet.hbar * t / (2.0 * packet.mass)
    d = packet.dimension
    return (2.0 * math.pi * s2)**(-d / 4.0) * (1.0 + (tau / s2)**2)**(-d / 4.0)


def _packet_width(packet: GaussianPacket, t: float) -> float:
    tau = packet.hbar * t / (2.0 * packet.mass)
    return math.sqrt(packet.sigma0**2 + (tau / packet.sigma0)**2)


@dataclass(frozen=True)
class AnalyticState:
    """Superposition sum_i c_i * packet_i of free packets sharing hbar and mass."""

    terms: tuple[tuple[complex, Packet], ...]

    def __post_init__(self):
        terms = tuple((complex(c), p) for c, p in self.terms)
        if not terms:
            raise ValueError("an analytic state needs at least one term")
        if all(c == 0 for c, _ in terms):
            raise ValueError("coefficients are all zero")
        first = terms[0][1]
        for _, packet in terms[1:]:
            if (packet.dimension != first.dimension or packet.hbar != first.hbar or
                    packet.mass != first.mass):
                raise ValueError("terms must share dimension, hbar and mass")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, packet: Packet) -> "AnalyticState":
        return cls(((1.0, packet),))

    @property
    def dimension(self) -> int:
        return self.terms[0][1].dimension

    @property
    def hbar(self) -> float:
        return self.terms[0][1].hbar

    @property
    def masses(self) -> np.ndarray:
        return np.full(self.dimension, self.terms[0][1].mass)

    def jet(self, points: np.ndarray, t: float) -> Jet:
        n, d = points.shape
        psi = np.zeros(n, dtype=complex)
        grad = np.zeros((n, d), dtype=complex)
        hess = np.zeros((n, d), dtype=complex)
        scale = np.zeros(n)
        for c, packet in self.terms:
            p, g, h = _packet_jet(packet, points, t)
            psi += c * p
            grad += c * g
            hess += c * h
            scale += abs(c) * np.abs(p)
        return Jet(psi, grad, hess, scale)

    def eval(self, x, t: float):
        return evaluate(self, x, t)

    def amplitude_bound(self, t: float) -> float:
        return sum(abs(c) * _packet_peak(p, t) for c, p in self.terms)

    def bounding_box(self, t: float, nsigma: float = 8.0) -> Optional[np.ndarray]:
        """(d, 2) box holding every Gaussian term to nsigma widths; None for plane waves."""
        lo = np.full(self.dimension, np.inf)
        hi = np.full(self.dimension, -np.inf)
        for _, packet in self.terms:
            if isinstance(packet, PlaneWave):
                return None
            center = np.asarray(packet.center) + \
                packet.hbar * np.asarray(packet.k) * t / packet.mass
            width = nsigma * _packet_width(packet, t)
            lo = np.minimum(lo, center - width)
            hi = np.maximum(hi, center + width)
        return np.stack([lo, hi], axis=1)

    def with_relative_phase(self, phase: float, index: int = 1) -> "AnalyticState":
        """Multiply term `index` by exp(i phase), e.g. an enclosed-flux phase."""
        terms = list(self.terms)
        c, packet = terms[index]
        terms[index] = (c * cmath.exp(1j * phase), packet)
        return AnalyticState(tuple(terms))


@dataclass(frozen=True)
class StationaryState:
    """Eigenstate of some Hamiltonian: shape(x) * exp(-i E t / hbar).

    `shape` is evaluated at t = 0 only; its own free evolution is ignored.
    """

    shape: AnalyticState
    energy: float

    @property
    def dimension(self) -> int:
        return self.shape.dimension

    @property
    def hbar(self) -> float:
        return self.shape.hbar

    @property
    def masses(self) -> np.ndarray:
        return self.shape.masses

    def jet(self, points: np.ndarray, t: float) -> Jet:
        base = self.shape.jet(points, 0.0)
        rotation = cmath.exp(-1j * self.energy * t / self.hbar)
        return Jet(base.psi * rotation, base.grad * rotation, base.hess * rotation,
                   base.scale)

    def eval(self, x, t: float):
        return evaluate(self, x, t)

    def amplitude_bound(self, t: float) -> float:
        return self.shape.amplitude_bound(0.0)

    def bounding_box(self, t: float, nsigma: float = 8.0) -> Optional[np.ndarray]:
        return self.shape.bounding_box(0.0, nsigma)


def _overlap_1d(g1: GaussianPacket, g2: GaussianPacket) -> complex:
    """<g1|g2> at t = 0 for 1D packets."""
    (c1,), (c2,) = g1.center, g2.center
    (k1,), (k2,) = g1.k, g2.k
    s1, s2 = g1.sigma0**2, g2.sigma0**2
    n1 = (2.0 * math.pi * s1)**-0.25
    n2 = (2.0 * math.pi * s2)**-0.25
    a = 0.25 / s1 + 0.25 / s2
    b = complex(0.5 * c1 / s1 + 0.5 * c2 / s2, k2 - k1)
    c = 0.25 * c1 * c1 / s1 + 0.25 * c2 * c2 / s2
    return n1 * n2 * math.sqrt(math.pi / a) * cmath.exp(b * b / (4.0 * a) - c)


@dataclass(frozen=True)
class TwoBodyState:
    """psi(x1, x2) = n [g1(x1) g2(x2) + s g2(x1) g1(x2)] with s = 0, +1, -1."""

    kind: Literal["product", "symmetric", "antisymmetric"]
    g1: GaussianPacket
    g2: GaussianPacket
    normalization: complex = 1.0

    def __post_init__(self):
        if self.g1.dimension != 1 or self.g2.dimension != 1:
            raise ValueError("two-body packets are one-dimensional")
        if self.g1.hbar != self.g2.hbar:
            raise ValueError("packets must share hbar")
        if self.kind != "product" and self.g1.mass != self.g2.mass:
            raise ValueError("(anti)symmetrized states need equal masses")
        overlap = abs(_overlap_1d(self.g1, self.g2))**2
        denominator = 2.0 * (1.0 + self.sign * overlap)
        if self.kind != "product" and denominator < 1e-12:
            raise ValueError("antisymmetrized identical packets vanish")
        norm = 1.0 if self.kind == "product" else 1.0 / math.sqrt(denominator)
        object.__setattr__(self, "normalization", complex(norm))

    @property
    def sign(self) -> float:
        return {"product": 0.0, "symmetric": 1.0, "antisymmetric": -1.0}[self.kind]

    @property
    def dimension(self) -> int:
        return 2

    @property
    def hbar(self) -> float:
        return self.g1.hbar

    @property
    def masses(self) -> np.ndarray:
        return np.array([self.g1.mass, self.g2.mass])

    def jet(self, points: np.ndarray, t: float) -> Jet:
        x1, x2 = points[:, :1], points[:, 1:]
        a1, da1, ha1 = _packet_jet(self.g1, x1, t)  # g1(x1)
        b2, db2, hb2 = _packet_jet(self.g2, x2, t)  # g2(x2)
        b1, db1, hb1 = _packet_jet(self.g2, x1, t)  # g2(x1)
        a2, da2, ha2 = _packet_jet(self.g1, x2, t)  # g1(x2)
        s, n = self.sign, self.normalization
        psi = n * (a1 * b2 + s * b1 * a2)
        grad = n * np.stack([da1[:, 0] * b2 + s * db1[:, 0] * a2,
                             a1 * db2[:, 0] + s * b1 * da2[:, 0]], axis=1)
        hess = n * np.stack([ha1[:, 0] * b2 + s * hb1[:, 0] * a2,
                             a1 * hb2[:, 0] + s * b1 * ha2[:, 0]], axis=1)
        scale = abs(n) * (np.abs(a1 * b2) + abs(s) * np.abs(b1 * a2))
        return Jet(psi, grad, hess, scale)

    def eval(self, x, t: float):
        return evaluate(self, x, t)

    def amplitude_bound(self, t: float) -> float:
        peak = _packet_peak(self.g1, t) * _packet_peak(self.g2, t)
        return abs(self.normalization) * peak * (1.0 + abs(self.sign))

    def bounding_box(self, t: float, nsigma: float = 8.0) -> np.ndarray:
        box = AnalyticState(((1.0, self.g1), (1.0, self.g2))).bounding_box(t, nsigma)
        return np.vstack([box, box])


State = Union[AnalyticState, StationaryState, TwoBodyState]


def as_points(state: State, x) -> tuple[np.ndarray, bool]:
    points = np.asarray(x, dtype=float)
    single = points.ndim <= 1
    points = np.atleast_1d(points).reshape(-1, state.dimension)
    return points, single


def evaluate(state: State, x, t: float):
    """psi at one point (returns complex) or at an (n, d) array of points."""
    points, single = as_points(state, x)
    psi = state.jet(points, t).psi
    return complex(psi[0]) if single else psi


def derivatives(state: State, x, t: float):
    """(psi, grad psi, laplacian psi), exact to floating precision."""
    points, single = as_points(state, x)
    jet = state.jet(points, t)
    lap = jet.hess.sum(axis=1)
    if single:
        return complex(jet.psi[0]), jet.grad[0], complex(lap[0])
    return jet.psi, jet.grad, lap


def _log_jet(state: State, points: np.ndarray, t: float,
             node_floor: Optional[float]):
    floor = settings.node_floor if node_floor is None else node_floor
    jet = state.jet(points, t)
    modulus = np.abs(jet.psi)
    valid = (jet.scale > SCALE_FLOOR) & (modulus > floor * jet.scale)
    safe = np.where(valid, jet.psi, 1.0)
    q = jet.grad / safe[:, None]
    h = jet.hess / safe[:, None]
    return q, h, valid


def velocity_field(state: State, points: np.ndarray, t: float,
                   node_floor: Optional[float] = None):
    """v_i = (hbar/m_i) Im(d_i psi / psi) at (n, d) points, with a validity mask."""
    q, _, valid = _log_jet(state, points, t, node_floor)
    v = state.hbar / state.masses * q.imag
    return np.where(valid[:, None], v, 0.0), valid


def potential_field(state: State, points: np.ndarray, t: float,
                    node_floor: Optional[float] = None):
    """Q = -sum_i hbar^2/(2 m_i) [Re(d_i^2 psi/psi) + Im(d_i psi/psi)^2]."""
    q, h, valid = _log_jet(state, points, t, node_floor)
    lap_r_over_r = h.real + q.imag**2
    coefficients = state.hbar**2 / (2.0 * state.masses)
    potential = -(lap_r_over_r * coefficients).sum(axis=1)
    return np.where(valid, potential, 0.0), valid


def kinetic_field(state: State, points: np.ndarray, t: float,
                  node_floor: Optional[float] = None):
    """|grad S|^2 / 2m summed per particle, i.e. sum_i m_i v_i^2 / 2."""
    v, valid = velocity_field(state, points, t, node_floor)
    return 0.5 * (state.masses * v * v).sum(axis=1), valid


def quantum_force(state: State, points: np.ndarray, t: float,
                  node_floor: Optional[float] = None):
    """-grad Q by central differences of the closed-form Q."""
    n, d = points.shape
    force = np.zeros((n, d))
    valid = np.ones(n, dtype=bool)
    for axis in range(d):
        step = np.zeros(d)
        step[axis] = FORCE_STEP
        q_plus, ok_plus = potential_field(state, points + step, t, node_floor)
        q_minus, ok_minus = potential_field(state, points - step, t, node_floor)
        force[:, axis] = -(q_plus - q_minus) / (2.0 * FORCE_STEP)
        valid &= ok_plus & ok_minus
    return np.where(valid[:, None], force, 0.0), valid


def bohm_velocity(state: State, x, t: float,
                  node_floor: Optional[float] = None) -> np.ndarray:
    """Guidance velocity at one configuration point."""
    points, _ = as_points(state, x)
    v, valid = velocity_field(state, points, t, node_floor)
    if not valid[0]:
        raise NodeProximity(f"|psi| below node floor at x={points[0]}, t={t}")
    return v[0]


def quantum_potential(state: State, x, t: float,
                      node_floor: Optional[float] = None) -> float:
    points, _ = as_points(state, x)
    q, valid = potential_field(state, points, t, node_floor)
    if not valid[0]:
        raise NodeProximity(f"|psi| below node floor at x={points[0]}, t={t}")
    return float(q[0])


def to_wavefield(state: State, grid: Grid2D, t: float) -> WaveField:
    """Sample a 1D state along x (constant along y) or a 2D state on the grid."""
    masses = np.unique(state.masses)
    if masses.size > 1:
        raise DimensionError(f"particle masses {state.masses.tolist()} differ; a WaveField has one mass")
    if state.dimension == 1:
        psi_x = evaluate(state, grid.x[:, None], t)
        psi = np.repeat(psi_x[:, None], grid.ny, axis=1)
    elif state.dimension == 2:
        xx, yy = grid.mesh()
        points = np.stack([xx.ravel(), yy.ravel()], axis=1)
        psi = evaluate(state, points, t).reshape(grid.shape)
    else:
        raise ValueError("grids hold 1D or 2D configuration spaces")
    return WaveField(grid, psi, hbar=state.hbar, mass=float(masses[0]), time=t)


def _vector(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"key '{key}' expects comma-separated numbers, got '{text}'",
                          key=key)


def _number(values: dict[str, str], key: str, kind=float):
    if key not in values:
        raise ConfigError(f"missing key '{key}'", key=key)
    try:
        return kind(values[key])
    except ValueError:
        raise ConfigError(f"key '{key}' has malformed value '{values[key]}'", key=key)


def parse_state(values: dict[str, str]) -> AnalyticState:
    """Build an AnalyticState from state-file keys (schema in docs/CONFIG_SCHEMA.md)."""
    hbar = _number(values, "hbar")
    mass = _number(values, "mass")
    count = _number(values, "terms", int)
    if count < 1:
        raise ConfigError("key 'terms' must be at least 1", key="terms")
    known = {"hbar", "mass", "terms"}
    terms = []
    for i in range(count):
        prefix = f"term{i}."
        keys = [prefix + name for name in ("coeff_re", "coeff_im", "center", "sigma0", "k")]
        known.update(keys)
        for key in keys:
            if key not in values:
                raise ConfigError(f"missing key '{key}'", key=key)
        coeff = complex(_number(values, keys[0]), _number(values, keys[1]))
        try:
            packet = GaussianPacket(center=_vector(values[keys[2]], keys[2]),
                                    sigma0=_number(values, keys[3]),
                                    k=_vector(values[keys[4]], keys[4]),
                                    hbar=hbar, mass=mass)
        except ValidationError as exc:
            raise ConfigError(f"term {i}: {exc.errors()[0]['msg']}", key=prefix)
        terms.append((coeff, packet))
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'", key=unknown[0])
    try:
        return AnalyticState(tuple(terms))
    except ValueError as exc:
        raise ConfigError(str(exc), key="terms")


def load_state_file(path: Union[str, Path]) -> AnalyticState:
    state = parse_state(parse_key_values(read_config_text(path), str(path)))
    logger.debug(f"Loaded {len(state.terms)}-term state from {path}")
    return state


def gaussian_slits(half_separation: float, sigma0: float, hbar: float, mass: float,
                   phase: float = 0.0,
                   coefficients: Sequence[complex] = (1.0, 1.0)) -> AnalyticState:
    """Two transverse 1D packets at -X and +X; `phase` multiplies the +X term."""
    left = GaussianPacket(center=(-half_separation,), sigma0=sigma0, k=(0.0,),
                          hbar=hbar, mass=mass)
    right = GaussianPacket(center=(half_separation,), sigma0=sigma0, k=(0.0,),
                           hbar=hbar, mass=mass)
    state = AnalyticState(((coefficients[0], left), (coefficients[1], right)))
    return state.with_relative_phase(phase) if phase else state
