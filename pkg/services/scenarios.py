# Reference experiments: two slits, enclosed flux, classical limit, two bodies

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.stats import kstest

from models import (AharonovBohmConfig, ClassicalLimitConfig, ConfigError, Ensemble,
                    GaussianPacket, Grid2D, NumericalError, ScalarField,
                    StateEnsembleConfig, TwoBodyConfig, TwoSlitConfig, WaveField)
from services import analytic_states, guidance
from services.analytic_states import AnalyticState, TwoBodyState
from services.classical_flow import kick_drift_kick

logger = logging.getLogger(__name__)

SummaryValue = Union[int, float, str]

# Lower bound for the antisymmetric witness of configs/two_body.cfg,
# recomputed by init_scripts/freeze_witness.py
W_ANTISYMMETRIC_FLOOR = 1.9


@dataclass
class RunResult:
    """Ensembles and fields keyed by dump suffix ("" is the primary one)."""

    ensembles: dict[str, Ensemble]
    fields: dict[str, ScalarField]
    summary: dict[str, SummaryValue] = field(default_factory=dict)
    wavefields: dict[str, WaveField] = field(default_factory=dict)

    @property
    def ensemble(self) -> Ensemble:
        return self.ensembles[""]

    def __post_init__(self):
        for key, value in self.summary.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise NumericalError(f"summary value {key} = {value}")


class ForwardDrift:
    """Lifts a transverse 1D provider into the (longitudinal, transverse) plane.

    The longitudinal motion is the uniform drift of the common forward k.
    """

    dimension = 2

    def __init__(self, transverse, speed: float, mass: float):
        self.transverse = transverse
        self.speed = speed
        self.mass = mass

    def velocity(self, points, t):
        v, valid = self.transverse.velocity(points[:, 1:], t)
        return np.column_stack([np.full(len(points), self.speed), v[:, 0]]), valid

    def diagnostics(self, points, t):
        q, ke = self.transverse.diagnostics(points[:, 1:], t)
        return q, ke + 0.5 * self.mass * self.speed**2


def analytic_fringe_spacing(half_separation: float, sigma0: float, t: float,
                            hbar: float = 1.0, mass: float = 1.0) -> float:
    """Fringe period of two equal free packets at +-X: 2 pi (sigma0^4 + tau^2) / (X tau)."""
    tau = hbar * t / (2.0 * mass)
    if tau <= 0:
        raise ValueError("fringes need t > 0")
    return 2.0 * math.pi * (sigma0**4 + tau**2) / (half_separation * tau)


def wrap_shift(shift, spacing: float):
    """Map into (-spacing/2, spacing/2]."""
    return shift - spacing * np.ceil(np.asarray(shift) / spacing - 0.5)


@dataclass(frozen=True)
class FringeReport:
    bin_width: float
    centers: np.ndarray
    counts: np.ndarray
    maxima: np.ndarray  # parabola vertices, ascending
    centroid: float
    phase: float  # arg of the first Fourier harmonic at the fringe period

    @property
    def measured_spacing(self) -> float:
        if self.maxima.size < 2:
            return 0.0
        return float(np.mean(np.diff(self.maxima)))


def fringe_analysis(samples: np.ndarray, spacing: float) -> FringeReport:
    """Locate fringe maxima in a transverse arrival histogram.

    Bins are spacing/16 wide and symmetric about 0. A bin is a candidate
    when it beats its left neighbour, is not beaten by its right one, and
    holds at least half the highest count. Each candidate is refined by a
    least-squares parabola over +-spacing/4; vertices closer than half a
    period are merged, keeping the one on the higher bin.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise NumericalError("no arrivals to histogram")
    width = spacing / 16.0
    half_bins = int(math.ceil(np.max(np.abs(samples)) / width)) + 1
    edges = width * np.arange(-half_bins, half_bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])

    threshold = 0.5 * counts.max()
    peaks = [i for i in range(1, counts.size - 1)
             if counts[i] > counts[i - 1] and counts[i] >= counts[i + 1]
             and counts[i] >= threshold]
    reach = 4  # bins within spacing/4
    found: list[tuple[float, int]] = []
    for i in peaks:
        lo, hi = max(0, i - reach), min(counts.size, i + reach + 1)
        a, b, _ = np.polyfit(centers[lo:hi], counts[lo:hi].astype(float), 2)
        vertex = -b / (2.0 * a) if a < 0 else centers[i]
        if abs(vertex - centers[i]) > spacing / 4:
            vertex = centers[i]
        found.append((float(vertex), int(counts[i])))

    merged: list[tuple[float, int]] = []
    for vertex, height in sorted(found):
        if merged and vertex - merged[-1][0] < 0.5 * spacing:
            if height > merged[-1][1]:
                merged[-1] = (vertex, height)
            continue
        merged.append((vertex, height))
    return FringeReport(bin_width=width, centers=centers, counts=counts,
                        maxima=np.array([v for v, _ in merged]),
                        centroid=float(np.mean(samples)),
                        phase=float(np.angle(np.mean(np.exp(2j * math.pi * samples / spacing)))))


def fringe_shift(reference: FringeReport, shifted: FringeReport, spacing: float) -> float:
    """Displacement of the central fringe against a reference pattern.

    Measured as the circular centroid of the arrivals at the fringe period.
    Both patterns must show fringes.
    """
    if reference.maxima.size == 0 or shifted.maxima.size == 0:
        raise NumericalError("fringe detection found no maxima")
    turn = shifted.phase - reference.phase
    return float(wrap_shift(spacing * turn / (2.0 * math.pi), spacing))


def bunching_ratio(samples: np.ndarray, spacing: float, phase: float = 0.0) -> float:
    """Arrivals within spacing/8 of an intensity maximum, over the uniform fraction 1/4."""
    offset = wrap_shift(np.asarray(samples) - phase * spacing / (2.0 * math.pi), spacing)
    return float(np.mean(np.abs(offset) <= spacing / 8.0) / 0.25)


def _span(state, t_final: float, nsigma: float = 4.0) -> tuple[float, float]:
    """Interval along x covering a 1D state at t = 0 and at t_final."""
    first = state.bounding_box(0.0, nsigma)[0]
    last = state.bounding_box(t_final, nsigma)[0]
    return float(min(first[0], last[0])), float(max(first[1], last[1]))


def _q_surface_over_time(state, times: np.ndarray, span: np.ndarray,
                         grid: Grid2D) -> ScalarField:
    """Q(t, x) of a 1D state on a grid whose first axis is time or its longitudinal image."""
    values = np.zeros(grid.shape)
    mask = np.zeros(grid.shape, dtype=bool)
    points = span[:, None]
    for i, t in enumerate(times):
        q, valid = analytic_states.potential_field(state, points, float(t))
        values[i] = q
        mask[i] = ~valid
    return ScalarField(grid, values, mask)


@dataclass(frozen=True)
class SlitRun:
    state: AnalyticState
    ensemble: Ensemble
    arrivals: np.ndarray
    spacing: float
    report: FringeReport


def slit_ensemble(config: Union[TwoSlitConfig, AharonovBohmConfig],
                  phase: float = 0.0) -> SlitRun:
    """Integrate a two-slit ensemble with relative phase `phase` on the +X slit."""
    state = analytic_states.gaussian_slits(config.slit_half_separation, config.sigma0,
                                           config.hbar, config.mass, phase=phase)
    speed = config.hbar * config.k_forward / config.mass
    transverse = guidance.sample_initial(state, config.n_trajectories, config.seed)
    initials = np.column_stack([np.zeros(len(transverse)), transverse[:, 0]])
    provider = ForwardDrift(guidance.AnalyticVelocityProvider(state), speed, config.mass)
    ensemble = guidance.integrate(initials, provider, 0.0, config.t_final, config.dt,
                                  config.record_every, seed=config.seed,
                                  source=f"{config.name} phase={phase:.17g}")
    arrivals = ensemble.positions[-1, ensemble.alive_at(ensemble.times.size - 1), 1]
    spacing = analytic_fringe_spacing(config.slit_half_separation, config.sigma0,
                                      float(ensemble.times[-1]), config.hbar, config.mass)
    return SlitRun(state, ensemble, arrivals, spacing, fringe_analysis(arrivals, spacing))


def slit_surface(config, state: AnalyticState) -> ScalarField:
    speed = config.hbar * config.k_forward / config.mass
    sigma_final = math.hypot(config.sigma0,
                             config.hbar * config.t_final / (2.0 * config.mass * config.sigma0))
    half_width = config.slit_half_separation + 3.0 * sigma_final
    grid = Grid2D.spanning((0.0, speed * config.t_final), (-half_width, half_width),
                           config.grid_nx, config.grid_ny)
    return _q_surface_over_time(state, grid.x / speed, grid.y, grid)


def q_asymmetry(surface: ScalarField) -> float:
    """Integral of Q over the upper transverse half-plane minus the lower one."""
    y = surface.grid.y
    weights = np.where(y > 0, 1.0, np.where(y < 0, -1.0, 0.0))
    return float(np.sum(surface.values * weights[None, :]) * surface.grid.cell_area)


def slit_summary(run: SlitRun) -> dict[str, SummaryValue]:
    ensemble = run.ensemble
    crossing = guidance.check_no_crossing(ensemble, axis=1)
    k = ensemble.times.size - 1
    far_cdf = guidance.marginal_cdf(run.state, float(ensemble.times[k]))
    summary: dict[str, SummaryValue] = {
        "n_trajectories": ensemble.size,
        "truncated": int(np.count_nonzero(ensemble.flags)),
        "far_plane_time": float(ensemble.times[k]),
        "fringe_spacing_analytic": run.spacing,
        "fringe_spacing_measured": run.report.measured_spacing,
        "fringe_count": int(run.report.maxima.size),
        "histogram_bin_width": run.report.bin_width,
        "centroid": run.report.centroid,
        "bunching_ratio": bunching_ratio(run.arrivals, run.spacing),
        "no_crossing_violations": crossing.violations,
        "equivariance_ks": float(kstest(run.arrivals, far_cdf).statistic),
    }
    for i, vertex in enumerate(run.report.maxima):
        summary[f"fringe_{i}"] = float(vertex)
    return summary


def run_two_slit(config: TwoSlitConfig) -> RunResult:
    logger.info(f"two_slit: {config.n_trajectories} trajectories to t={config.t_final}")
    run = slit_ensemble(config)
    summary = slit_summary(run)
    return RunResult({"": run.ensemble}, {"": slit_surface(config, run.state)}, summary)


def run_aharonov_bohm(config: AharonovBohmConfig) -> RunResult:
    """Two slits with a relative flux phase, compared against a phase-free reference."""
    logger.info(f"aharonov_bohm: flux phase {config.flux_phase:.6g}")
    run = slit_ensemble(config, config.flux_phase)
    reference = run if config.flux_phase == 0 else slit_ensemble(config, 0.0)
    surface = slit_surface(config, run.state)
    summary = slit_summary(run)
    summary["bunching_ratio"] = bunching_ratio(run.arrivals, run.spacing, config.flux_phase)
    summary["flux_phase"] = config.flux_phase
    summary["fringe_shift"] = fringe_shift(reference.report, run.report, run.spacing)
    summary["fringe_shift_analytic"] = float(
        wrap_shift(config.flux_phase * run.spacing / (2.0 * math.pi), run.spacing))
    summary["q_asymmetry"] = q_asymmetry(surface)
    return RunResult({"": run.ensemble}, {"": surface}, summary)


def _flow_ensemble(record, state, damping, mass: float, seed: int, source: str) -> Ensemble:
    velocities = record.momenta / mass
    q = np.full(record.positions.shape[:2], np.nan)
    for k, t in enumerate(record.times):
        alive = record.lengths > k
        values, _ = analytic_states.potential_field(state, record.positions[k, alive], float(t))
        q[k, alive] = damping(float(t)) * values
    ke = 0.5 * mass * np.sum(velocities**2, axis=2)
    return Ensemble(times=record.times, positions=record.positions, velocities=velocities,
                    q=q, ke=ke, lengths=record.lengths, flags=record.flags, seed=seed,
                    source=source)


def classical_limit_ensembles(config: ClassicalLimitConfig, decay_time: Optional[float] = None):
    """(state, {"quantum", "damped", "classical"}) ensembles for one sample of x0.

    Each particle obeys m dv/dt = -f(t) dQ/dx with V = 0, launched on the
    guidance condition p = m v(x0, 0). f is 1, exp(-t / decay_time) and 0.
    """
    tau = config.decay_time if decay_time is None else decay_time
    packet = GaussianPacket(center=(config.center,), sigma0=config.sigma0, k=(config.k,),
                            hbar=config.hbar, mass=config.mass)
    state = AnalyticState.single(packet)
    x0 = guidance.sample_initial(state, config.n_trajectories, config.seed)
    v0, _ = analytic_states.velocity_field(state, x0, 0.0)
    p0 = config.mass * v0

    dampings = {"quantum": lambda t: 1.0,
                "damped": lambda t: math.exp(-t / tau),
                "classical": lambda t: 0.0}
    ensembles = {}
    for name, damping in dampings.items():
        def force(x, t, damping=damping):
            f = damping(t)
            if f == 0.0:
                return np.zeros_like(x), np.ones(len(x), dtype=bool)
            push, valid = analytic_states.quantum_force(state, x, t)
            return f * push, valid

        record = kick_drift_kick(force, x0, p0, config.mass, 0.0, config.t_final,
                                 config.dt, config.record_every)
        ensembles[name] = _flow_ensemble(record, state, damping, config.mass, config.seed,
                                         f"classical_limit {name} decay_time={tau:.17g}")
    return state, ensembles


def spreading_trajectory(packet: GaussianPacket, x0: np.ndarray, t) -> np.ndarray:
    """Exact guidance trajectory of a free packet: the drift plus a sigma(t)/sigma0 stretch."""
    t = np.asarray(t, dtype=float)[..., None, None]
    tau = packet.hbar * t / (2.0 * packet.mass)
    stretch = np.sqrt(1.0 + (tau / packet.sigma0**2)**2)
    center = np.asarray(packet.center)
    drift = packet.hbar * np.asarray(packet.k) * t / packet.mass
    return center + drift + (np.asarray(x0) - center) * stretch


def run_classical_limit(config: ClassicalLimitConfig) -> RunResult:
    logger.info(f"classical_limit: decay_time={config.decay_time:.6g}, t_final={config.t_final}")
    state, ensembles = classical_limit_ensembles(config)
    damped, classical, quantum = ensembles["damped"], ensembles["classical"], ensembles["quantum"]
    packet = state.terms[0][1]

    exact = spreading_trajectory(packet, quantum.positions[0], quantum.times)
    oracle_error = float(np.nanmax(np.abs(quantum.positions - exact)))
    final_classical = classical.positions[-1, :, 0]
    scale = float(np.max(np.abs(final_classical - np.mean(final_classical))))
    divergence = float(np.nanmax(np.abs(damped.positions - classical.positions)))
    mean_fq = np.nanmean(np.abs(damped.q), axis=1)
    summary: dict[str, SummaryValue] = {
        "n_trajectories": damped.size,
        "truncated": int(np.count_nonzero(damped.flags)),
        "decay_time": config.decay_time,
        "quantum_oracle_error": oracle_error,
        "max_divergence": divergence,
        "trajectory_scale": scale,
        "relative_divergence": divergence / scale if scale > 0 else 0.0,
        "mean_abs_fq_initial": float(mean_fq[0]),
        "mean_abs_fq_final": float(mean_fq[-1]),
        "fq_monotone": int(np.all(np.diff(mean_fq) <= 1e-15 * mean_fq[0])),
    }

    grid = Grid2D.spanning((0.0, config.t_final), _span(state, config.t_final),
                           config.grid_nx, config.grid_ny)
    surface = _q_surface_over_time(state, grid.x, grid.y, grid)
    return RunResult({"": damped, "quantum": quantum, "classical": classical},
                     {"": surface}, summary)


def two_body_states(config: TwoBodyConfig) -> dict[str, TwoBodyState]:
    g1 = GaussianPacket(center=(-config.half_separation,), sigma0=config.sigma0,
                        k=(config.k,), hbar=config.hbar, mass=config.mass)
    g2 = GaussianPacket(center=(config.half_separation,), sigma0=config.sigma0,
                        k=(-config.k,), hbar=config.hbar, mass=config.mass)
    return {kind: TwoBodyState(kind, g1, g2) for kind in ("product", "antisymmetric")}


def nonlocality_witness(state: TwoBodyState, x1: float, x2_ref: float, t: float,
                        sweep: np.ndarray) -> float:
    """max over x2 of |v1(x1, x2) - v1(x1, x2_ref)|; node-masked probes are skipped."""
    points = np.column_stack([np.full(sweep.size + 1, x1), np.append(sweep, x2_ref)])
    v, valid = analytic_states.velocity_field(state, points, t)
    if not valid[-1]:
        raise NumericalError(f"reference probe ({x1}, {x2_ref}) sits on a node")
    skipped = int(np.count_nonzero(~valid[:-1]))
    if skipped:
        logger.warning(f"nonlocality_witness: skipped {skipped} probes below the node floor")
    gaps = np.abs(v[:-1, 0] - v[-1, 0])[valid[:-1]]
    return float(gaps.max()) if gaps.size else 0.0


def witness_sweep(config: TwoBodyConfig, state: TwoBodyState) -> np.ndarray:
    box = state.bounding_box(config.probe_time, 6.0)
    return np.linspace(box[1, 0], box[1, 1], config.sweep_points)


def run_two_body(config: TwoBodyConfig) -> RunResult:
    logger.info(f"two_body: packets at +-{config.half_separation}, k=+-{config.k}")
    states = two_body_states(config)
    ensembles, fields, wavefields = {}, {}, {}
    summary: dict[str, SummaryValue] = {}
    for kind, state in states.items():
        initials = guidance.sample_initial(state, config.n_trajectories, config.seed)
        ensemble = guidance.integrate(initials, state, 0.0, config.t_final, config.dt,
                                      config.record_every, seed=config.seed,
                                      source=f"two_body {kind}")
        suffix = "" if kind == "antisymmetric" else kind
        ensembles[suffix] = ensemble

        box = state.bounding_box(config.probe_time, 4.0)
        grid = Grid2D.spanning(tuple(box[0]), tuple(box[1]), config.grid_nx, config.grid_ny)
        xx, yy = grid.mesh()
        q, valid = analytic_states.potential_field(
            state, np.stack([xx.ravel(), yy.ravel()], axis=1), config.probe_time)
        fields[suffix] = ScalarField(grid, q.reshape(grid.shape), ~valid.reshape(grid.shape))
        wavefields[suffix] = analytic_states.to_wavefield(state, grid, config.probe_time)

        summary[f"witness_{kind}"] = nonlocality_witness(
            state, config.probe_x1, config.probe_x2_ref, config.probe_time,
            witness_sweep(config, state))
        summary[f"diagonal_crossings_{kind}"] = guidance.count_diagonal_crossings(ensemble)
        summary[f"truncated_{kind}"] = int(np.count_nonzero(ensemble.flags))
    summary["witness_floor"] = W_ANTISYMMETRIC_FLOOR
    summary["n_trajectories"] = config.n_trajectories
    return RunResult(ensembles, fields, summary, wavefields)


def run_state_ensemble(config: StateEnsembleConfig,
                       base_dir: Optional[Path] = None) -> RunResult:
    """Ensemble for a 1D state read from a state definition file."""
    path = Path(config.state_file)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    state = analytic_states.load_state_file(path)
    if state.dimension != 1:
        raise ConfigError("key 'state_file' must define a 1D state", key="state_file")
    if state.hbar != config.hbar or state.terms[0][1].mass != config.mass:
        logger.warning("state file units differ from the config; the state file wins")
    logger.info(f"state_ensemble: {len(state.terms)} terms from {path}")

    initials = guidance.sample_initial(state, config.n_trajectories, config.seed)
    ensemble = guidance.integrate(initials, state, 0.0, config.t_final, config.dt,
                                  config.record_every, seed=config.seed,
                                  source=f"state_ensemble {path.name}")
    crossing = guidance.check_no_crossing(ensemble)
    summary: dict[str, SummaryValue] = {
        "n_trajectories": ensemble.size,
        "terms": len(state.terms),
        "truncated": int(np.count_nonzero(ensemble.flags)),
        "no_crossing_violations": crossing.violations,
        "equivariance_ks": guidance.equivariance_distance(ensemble, state, config.t_final),
    }
    grid = Grid2D.spanning((0.0, config.t_final), _span(state, config.t_final),
                           config.grid_nx, config.grid_ny)
    surface = _q_surface_over_time(state, grid.x, grid.y, grid)
    return RunResult({"": ensemble}, {"": surface}, summary)


def run_scenario(config, base_dir: Optional[Path] = None) -> RunResult:
    if isinstance(config, TwoSlitConfig):
        return run_two_slit(config)
    if isinstance(config, AharonovBohmConfig):
        return run_aharonov_bohm(config)
    if isinstance(config, ClassicalLimitConfig):
        return run_classical_limit(config)
    if isinstance(config, TwoBodyConfig):
        return run_two_body(config)
    if isinstance(config, StateEnsembleConfig):
        return run_state_ensemble(config, base_dir)
    raise ConfigError(f"unknown scenario {getattr(config, 'name', config)!r}", key="name")
