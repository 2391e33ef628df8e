# Acceptance checks behind `main.py validate`

import functools
import logging
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from models import (ConfigError, GaussianPacket, Grid2D, HamiltonianSpec, PlaneWave,
                    ScalarField)
from services import analytic_states, classical_flow, grid_wavefield, guidance, scenarios
from services.analytic_states import AnalyticState, StationaryState
from services.quantum_potential import (energy_decompose, hj_residual,
                                        phase_time_derivative, q_field)
from utils.config_file import load_scenario_config

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

GROUPS = ("potential", "hamilton_jacobi", "continuity", "guidance", "energy", "no_crossing",
          "equivariance", "aharonov_bohm", "two_body", "classical_limit", "symplectic",
          "determinism")

SEED = 20240611
# seed of the ensembles compared against |psi|^2 at a fixed KS quantile
KS_SEED = 1


@dataclass(frozen=True)
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Check:
    group: str
    name: str
    run: Callable[[], tuple[bool, str]]


_registry: list[Check] = []


def check(group: str):
    if group not in GROUPS:
        raise ValueError(f"unknown check group {group}")

    def register(function):
        _registry.append(Check(group, function.__name__.removeprefix("check_"), function))
        return function

    return register


def checks(only: Optional[str] = None) -> list[Check]:
    if only is not None and only not in GROUPS:
        raise ConfigError(f"--only must be one of {', '.join(GROUPS)}, got '{only}'", key="only")
    return [c for c in _registry if only is None or c.group == only]


def reference_config(name: str, **overrides):
    items = [f"{key}={value}" for key, value in overrides.items()]
    return load_scenario_config(CONFIG_DIR / f"{name}.cfg", items)


def run_checks(only: Optional[str] = None) -> list[CheckResult]:
    results = []
    # cached ensembles depend on settings.velocity_bias
    _slit_run.cache_clear()
    for item in checks(only):
        logger.info(f"validate: {item.group}/{item.name}")
        try:
            passed, detail = item.run()
        except Exception as exc:
            logger.exception(f"check {item.group}/{item.name} raised")
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(item.group, item.name, bool(passed), detail))
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [f"{'GROUP':<16} {'CHECK':<32} {'RESULT':<6} DETAIL", "-" * 96]
    for r in results:
        lines.append(f"{r.group:<16} {r.name:<32} {'PASS' if r.passed else 'FAIL':<6} {r.detail}")
    failed = sum(not r.passed for r in results)
    lines.append("-" * 96)
    lines.append(f"{len(results) - failed} passed, {failed} failed")
    return "\n".join(lines)


def _unit_gaussian(sigma0: float = 1.0, center: float = 0.0, k: float = 0.0) -> AnalyticState:
    return AnalyticState.single(GaussianPacket(center=(center,), sigma0=sigma0, k=(k,)))


def _line_grid(lo: float, hi: float, nx: int) -> Grid2D:
    """Grid along x for 1D states; the y extent is a dummy that the states ignore."""
    return Grid2D.spanning((lo, hi), (0.0, 7.0), nx, 8)


def _q_error(nx: int, limit: float) -> tuple[np.ndarray, np.ndarray]:
    grid = _line_grid(-6.0, 6.0, nx)
    field = analytic_states.to_wavefield(_unit_gaussian(), grid, 0.0)
    q = q_field(field).values[:, 3]
    x = grid.x
    inside = np.abs(x) <= limit
    return x[inside], np.abs(q - (0.25 - x**2 / 8.0))[inside]


# potential

@check("potential")
def check_gaussian_q_oracle():
    _, error = _q_error(512, 4.8)
    return error.max() < 5e-3, f"max |Q - (1/4 - x^2/8)| = {error.max():.2e} (< 5e-3)"


@check("potential")
def check_q_convergence_order():
    x_coarse, coarse = _q_error(257, 4.0)
    x_fine, fine = _q_error(513, 4.0)
    common = np.isin(np.round(x_fine, 9), np.round(x_coarse, 9))
    ratio = coarse.max() / fine[common].max()
    return abs(ratio - 4.0) < 0.4, f"error ratio {ratio:.3f} for dx/2 (4 +- 10%)"


@check("potential")
def check_q_phase_and_scale_invariance():
    grid = Grid2D.spanning((-6.0, 6.0), (-6.0, 6.0), 128, 128)
    packet = GaussianPacket(center=(0.5, -0.3), sigma0=1.2, k=(0.7, -0.4))
    field = grid_wavefield.gaussian_field(grid, packet, t=0.8)
    base = q_field(field)
    rotated = q_field(field.with_psi(np.exp(0.7j) * field.psi))
    scaled = q_field(field.with_psi(3.5 * field.psi))
    scale = base.max_abs()
    phase_gap = np.max(np.abs(rotated.values - base.values)) / scale
    scale_gap = np.max(np.abs(scaled.values - base.values)) / scale
    return max(phase_gap, scale_gap) < 1e-10, \
        f"relative change: phase {phase_gap:.1e}, scale {scale_gap:.1e} (< 1e-10)"


# hamilton_jacobi

def _free_gaussian_residual(nx: int, dt: float) -> float:
    grid = Grid2D.periodic((-12.0, 12.0), (0.0, 8.0), nx, 8)
    packet = GaussianPacket(center=(0.0,), sigma0=1.0, k=(0.5,))
    before = grid_wavefield.gaussian_field(grid, packet, t=1.0)
    after = grid_wavefield.propagate(before, None, dt, 1)
    return hj_residual(before, after, None).max_abs()


@check("hamilton_jacobi")
def check_free_gaussian_residual():
    residual = _free_gaussian_residual(4096, 1e-3)
    return residual < 1e-3, f"masked max residual {residual:.2e} (< 1e-3)"


@check("hamilton_jacobi")
def check_residual_refinement():
    coarse = _free_gaussian_residual(2048, 1e-3)
    fine = _free_gaussian_residual(4096, 1e-3)
    ratio = coarse / fine
    return ratio > 3.0, f"residual ratio {ratio:.2f} under dx/2 (second order: ~4)"


@check("hamilton_jacobi")
def check_plane_wave_dispersion():
    grid = Grid2D.periodic((0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi), 64, 8)
    field = grid_wavefield.plane_wave_field(grid, (2.0, 0.0))
    after = grid_wavefield.propagate(field, None, 1e-3, 1)
    s_t = phase_time_derivative(field, after)
    error = np.max(np.abs(s_t.values + 2.0))
    return error < 1e-8, f"max |dS/dt + hbar k^2/2m| = {error:.1e} (< 1e-8)"


@check("hamilton_jacobi")
def check_stationary_residual():
    grid = Grid2D.periodic((-8.0, 8.0), (0.0, 8.0), 2048, 8)
    ground = StationaryState(_unit_gaussian(sigma0=math.sqrt(0.5)), energy=0.5)
    xx, _ = grid.mesh()
    potential = ScalarField(grid, 0.5 * xx**2)
    before = grid_wavefield.normalize(analytic_states.to_wavefield(ground, grid, 0.0))
    after = grid_wavefield.propagate(before, potential, 1e-3, 1)
    residual = hj_residual(before, after, potential).max_abs()
    return residual < 1e-3, f"harmonic ground state residual {residual:.2e} (< 1e-3 on grids)"


# continuity

@check("continuity")
def check_continuity_residual():
    grid = Grid2D.periodic((-12.0, 12.0), (-12.0, 12.0), 256, 256)
    packet = GaussianPacket(center=(0.0, 0.0), sigma0=1.5, k=(0.3, 0.2))
    before = grid_wavefield.gaussian_field(grid, packet, t=0.5)
    after = grid_wavefield.propagate(before, None, 1e-3, 1)
    residual = grid_wavefield.continuity_residual(before, after).max_abs()
    return residual < 1e-3, f"masked max residual {residual:.2e} (< 1e-3)"


@check("continuity")
def check_norm_conservation():
    grid = Grid2D.periodic((-8.0, 8.0), (-8.0, 8.0), 64, 64)
    packet = GaussianPacket(center=(1.0, -0.5), sigma0=1.0, k=(1.0, 0.5))
    field = grid_wavefield.gaussian_field(grid, packet)
    xx, yy = grid.mesh()
    potential = ScalarField(grid, 0.05 * (xx**2 + yy**2))
    evolved = grid_wavefield.propagate(field, potential, 1e-2, 1000)
    drift = abs(evolved.norm() - field.norm())
    return drift < 1e-10, f"|norm change| over 1000 steps = {drift:.1e} (< 1e-10)"


@check("continuity")
def check_free_spreading_width():
    grid = Grid2D.periodic((-20.0, 20.0), (0.0, 8.0), 512, 8)
    field = grid_wavefield.gaussian_field(grid, GaussianPacket(center=(0.0,), sigma0=1.0, k=(0.0,)))
    evolved = grid_wavefield.propagate(field, None, 1e-2, 200)
    density = np.abs(evolved.psi[:, 0])**2
    width = math.sqrt(np.sum(grid.x**2 * density) / np.sum(density))
    error = abs(width / math.sqrt(2.0) - 1.0)
    return error < 0.01, f"sigma(2) = {width:.5f} vs sqrt(2) (rel {error:.1e} < 1%)"


# guidance

def _endpoint_error(dt: float, x0=(0.5, 1.0, -1.5)) -> float:
    packet = GaussianPacket(center=(0.0,), sigma0=1.0, k=(0.0,))
    initials = np.array(x0)[:, None]
    ensemble = guidance.integrate(initials, AnalyticState.single(packet), 0.0, 2.0, dt)
    exact = np.array(x0) * math.sqrt(2.0)
    return float(np.max(np.abs(ensemble.positions[-1, :, 0] - exact)))


@check("guidance")
def check_spreading_trajectory_oracle():
    error = _endpoint_error(1e-3)
    return error < 1e-6, f"|x(2) - x0 sqrt(2)| = {error:.1e} (< 1e-6)"


@check("guidance")
def check_rk4_convergence():
    ratio = _endpoint_error(0.1) / _endpoint_error(0.05)
    return abs(ratio - 16.0) < 3.2, f"error ratio {ratio:.2f} for dt/2 (16 +- 20%)"


@check("guidance")
def check_plane_wave_motion():
    wave = AnalyticState.single(PlaneWave(k=(2.0,)))
    ensemble = guidance.integrate(np.array([[-1.0], [0.0], [3.0]]), wave, 0.0, 1.5, 1e-2)
    error = np.max(np.abs(ensemble.positions[-1, :, 0] - (np.array([-1.0, 0.0, 3.0]) + 3.0)))
    return error < 1e-12, f"|x(t) - x0 - 2t| = {error:.1e}"


@check("guidance")
def check_sampling_moments():
    samples = guidance.sample_initial(_unit_gaussian(), 100_000, SEED)[:, 0]
    mean_error = abs(samples.mean())
    width_error = abs(samples.std() - 1.0)
    return mean_error < 0.02 and width_error < 0.02, \
        f"mean {samples.mean():+.4f}, sigma {samples.std():.4f} (n = 1e5)"


# energy

@check("energy")
def check_harmonic_energy_split():
    ground = StationaryState(_unit_gaussian(sigma0=math.sqrt(0.5)), energy=0.5)
    worst = 0.0
    for x in np.linspace(-3.0, 3.0, 61):
        split = energy_decompose(ground, lambda p: 0.5 * p[:, 0]**2, [x], t=0.3)
        worst = max(worst, abs(split.total - 0.5), abs(split.qpe - (1 - x * x) / 2), abs(split.ke))
    return worst < 1e-6, f"max deviation from ke=0, qpe=(1-x^2)/2, total=1/2: {worst:.1e}"


@check("energy")
def check_plane_wave_energy_split():
    split = energy_decompose(AnalyticState.single(PlaneWave(k=(2.0,))), None, [0.7])
    ok = abs(split.ke - 2.0) < 1e-12 and abs(split.qpe) < 1e-12
    return ok, f"ke={split.ke:.6g}, qpe={split.qpe:.1e}, total={split.total:.6g}"


@check("energy")
def check_energy_along_trajectories():
    ground = StationaryState(_unit_gaussian(sigma0=math.sqrt(0.5)), energy=0.5)
    initials = guidance.sample_initial(ground, 50, SEED)
    ensemble = guidance.integrate(initials, ground, 0.0, 3.0, 0.01, record_every=10)
    total = ensemble.ke + ensemble.q + 0.5 * ensemble.positions[:, :, 0]**2
    spread = float(np.nanmax(np.abs(total - 0.5)))
    return spread < 1e-6, f"max |ke + q + v - 1/2| along trajectories {spread:.1e}"


# no_crossing, equivariance and aharonov_bohm share two-slit runs

@functools.lru_cache(maxsize=None)
def _slit_run(phase: float, n: int) -> scenarios.SlitRun:
    config = reference_config("aharonov_bohm", n_trajectories=n, flux_phase=0.0)
    return scenarios.slit_ensemble(config, phase)


@check("no_crossing")
def check_two_slit_order():
    report = guidance.check_no_crossing(_slit_run(0.0, 1000).ensemble, axis=1)
    return report.ok, ("no violations over 1000 trajectories" if report.ok else
                       f"{report.violations} violations, first {report.pair} at t={report.time}")


@check("no_crossing")
def check_spreading_gaussian_order():
    state = _unit_gaussian()
    ensemble = guidance.integrate(guidance.sample_initial(state, 1000, SEED), state, 0.0, 3.0, 0.01)
    report = guidance.check_no_crossing(ensemble)
    return report.ok, f"{report.violations} violations"


@check("no_crossing")
def check_antisymmetric_diagonal():
    config = reference_config("two_body", n_trajectories=1000)
    state = scenarios.two_body_states(config)["antisymmetric"]
    initials = guidance.sample_initial(state, config.n_trajectories, config.seed)
    ensemble = guidance.integrate(initials, state, 0.0, config.t_final, config.dt)
    crossings = guidance.count_diagonal_crossings(ensemble)
    return crossings == 0, f"{crossings} of 1000 trajectories cross x1 = x2"


# equivariance

def _moving_gaussian_ks(bias: float) -> float:
    state = _unit_gaussian(k=3.0)
    provider = guidance.AnalyticVelocityProvider(state)
    if bias != 1.0:
        provider = guidance.ScaledVelocity(provider, bias)
    initials = guidance.sample_initial(state, 10_000, SEED)
    ensemble = guidance.integrate(initials, provider, 0.0, 2.0, 0.01, record_every=200)
    return guidance.equivariance_distance(ensemble, state, 2.0)


@check("equivariance")
def check_free_gaussian_ks():
    state = _unit_gaussian()
    initials = guidance.sample_initial(state, 10_000, KS_SEED)
    ensemble = guidance.integrate(initials, state, 0.0, 2.0, 0.01, record_every=200)
    start = guidance.equivariance_distance(ensemble, state, 0.0)
    end = guidance.equivariance_distance(ensemble, state, 2.0)
    ok = start < 1.63 / math.sqrt(10_000) and end < 0.05
    return ok, f"KS at t=0 {start:.4f} (< 0.0163), at t=2 {end:.4f} (< 0.05)"


@check("equivariance")
def check_moving_packet_ks():
    # a 1% velocity scale moves this packet's mean by 0.2 at t=4
    n = 40_000
    state = _unit_gaussian(k=5.0)
    initials = guidance.sample_initial(state, n, KS_SEED)
    ensemble = guidance.integrate(initials, state, 0.0, 4.0, 0.01, record_every=400)
    ks = guidance.equivariance_distance(ensemble, state, 4.0)
    limit = 1.95 / math.sqrt(n)
    return ks < limit, f"KS at t=4 {ks:.4f} (< {limit:.4f}, n = 4e4)"


@check("equivariance")
def check_two_slit_far_plane_ks():
    run = _slit_run(0.0, 10_000)
    ks = scenarios.slit_summary(run)["equivariance_ks"]
    return ks < 0.05, f"KS at the far plane {ks:.4f} (< 0.05, n = 1e4)"


@check("equivariance")
def check_biased_velocity_detected():
    ks = _moving_gaussian_ks(1.1)
    return ks > 0.1, f"KS with velocity x1.1 is {ks:.4f} (> 0.1)"


# aharonov_bohm

SWEEP = tuple(j * math.pi / 4 for j in range(8))


def _shift(phase: float) -> tuple[float, scenarios.SlitRun]:
    reference = _slit_run(0.0, 10_000)
    run = _slit_run(phase, 10_000)
    return scenarios.fringe_shift(reference.report, run.report, run.spacing), run


@check("aharonov_bohm")
def check_zero_flux_matches_two_slit():
    ab = scenarios.run_aharonov_bohm(reference_config("aharonov_bohm", flux_phase=0.0))
    ts = scenarios.run_two_slit(reference_config("two_slit"))
    shared = set(ab.summary) & set(ts.summary)
    same = all(ab.summary[key] == ts.summary[key] for key in shared)
    ok = same and ab.summary["fringe_shift"] == 0.0 and abs(ab.summary["q_asymmetry"]) < 1e-6
    return ok, (f"{len(shared)} shared keys equal: {same}; "
                f"shift {ab.summary['fringe_shift']:.2e}, asymmetry {ab.summary['q_asymmetry']:.1e}")


@check("aharonov_bohm")
def check_half_fringe_at_pi():
    shift, run = _shift(math.pi)
    error = abs(abs(shift) - 0.5 * run.spacing) / (0.5 * run.spacing)
    return error < 0.05, f"|shift(pi)| = {abs(shift):.4f} vs lambda/2 = {run.spacing / 2:.4f} ({error:.1%})"


@check("aharonov_bohm")
def check_shift_linear_in_phase():
    shifts = []
    for phase in SWEEP:
        shift, run = _shift(phase)
        shifts.append(shift)
    spacing = run.spacing
    unwrapped = np.unwrap(np.array(shifts), period=spacing)
    slope = np.polyfit(np.array(SWEEP), unwrapped, 1)[0]
    expected = spacing / (2.0 * math.pi)
    error = abs(slope / expected - 1.0)
    return error < 0.1, f"slope {slope:.4f} vs lambda/2pi = {expected:.4f} ({error:.1%})"


@check("aharonov_bohm")
def check_mirror_antisymmetry():
    shift_a, run = _shift(math.pi / 2)
    shift_b, _ = _shift(3 * math.pi / 2)
    total = abs(shift_a + shift_b)
    return total < run.report.bin_width, \
        f"|shift(pi/2) + shift(3pi/2)| = {total:.4f} (< bin {run.report.bin_width:.4f})"


@check("aharonov_bohm")
def check_q_asymmetry_sign_flip():
    config = reference_config("aharonov_bohm", flux_phase=0.0)
    values = []
    for phase in (math.pi / 2, 3 * math.pi / 2):
        state = analytic_states.gaussian_slits(config.slit_half_separation, config.sigma0,
                                               config.hbar, config.mass, phase=phase)
        values.append(scenarios.q_asymmetry(scenarios.slit_surface(config, state)))
    ok = values[0] * values[1] < 0
    return ok, f"asymmetry {values[0]:+.3e} at pi/2, {values[1]:+.3e} at 3pi/2"


# two_body

@check("two_body")
def check_witness():
    config = reference_config("two_body")
    states = scenarios.two_body_states(config)
    w = {kind: scenarios.nonlocality_witness(state, config.probe_x1, config.probe_x2_ref,
                                             config.probe_time,
                                             scenarios.witness_sweep(config, state))
         for kind, state in states.items()}
    ok = w["product"] < 1e-12 and w["antisymmetric"] > scenarios.W_ANTISYMMETRIC_FLOOR
    return ok, (f"W product {w['product']:.1e} (< 1e-12), antisymmetric "
                f"{w['antisymmetric']:.4f} (> {scenarios.W_ANTISYMMETRIC_FLOOR})")


@check("two_body")
def check_product_q_additive():
    config = reference_config("two_body")
    state = scenarios.two_body_states(config)["product"]
    rng = np.random.default_rng(SEED)
    points = rng.uniform(-4.0, 4.0, size=(200, 2))
    q, _ = analytic_states.potential_field(state, points, 0.7)
    q1, _ = analytic_states.potential_field(AnalyticState.single(state.g1), points[:, :1], 0.7)
    q2, _ = analytic_states.potential_field(AnalyticState.single(state.g2), points[:, 1:], 0.7)
    gap = float(np.max(np.abs(q - q1 - q2)))
    return gap < 1e-10, f"max |Q - Q1 - Q2| = {gap:.1e}"


@check("two_body")
def check_antisymmetric_vanishes_on_diagonal():
    config = reference_config("two_body")
    state = scenarios.two_body_states(config)["antisymmetric"]
    line = np.linspace(-6.0, 6.0, 101)
    psi = analytic_states.evaluate(state, np.column_stack([line, line]), 1.3)
    worst = float(np.max(np.abs(psi)))
    return worst < 1e-15, f"max |psi(x, x)| = {worst:.1e}"


# classical_limit

def _classical_config(**overrides):
    return reference_config("classical_limit", **overrides)


@check("classical_limit")
def check_classical_limit_reference():
    config = _classical_config()
    summary = scenarios.run_classical_limit(config).summary
    ok = (summary["quantum_oracle_error"] < 1e-4 and summary["relative_divergence"] < 0.01
          and summary["fq_monotone"] == 1)
    return ok, (f"f=1 oracle error {summary['quantum_oracle_error']:.1e}, "
                f"divergence {summary['relative_divergence']:.2%} of scale, "
                f"monotone |fQ|: {bool(summary['fq_monotone'])}")


@check("classical_limit")
def check_free_classical_lines():
    config = _classical_config(n_trajectories=100)
    _, ensembles = scenarios.classical_limit_ensembles(config)
    classical = ensembles["classical"]
    straight = classical.positions[0] + classical.velocities[0] * classical.times[:, None, None]
    error = float(np.max(np.abs(classical.positions - straight)))
    return error < 1e-9, f"max |x - x0 - v0 t| = {error:.1e}"


@check("classical_limit")
def check_decay_time_sweep():
    config = _classical_config(n_trajectories=200)
    divergences = []
    for fraction in (1e-1, 1e-2, 1e-3):
        _, ensembles = scenarios.classical_limit_ensembles(config, fraction * config.t_final)
        gap = np.abs(ensembles["damped"].positions[-1] - ensembles["classical"].positions[-1])
        divergences.append(float(np.max(gap)))
    ok = divergences[0] > divergences[1] > divergences[2]
    return ok, "max divergence " + ", ".join(f"{d:.2e}" for d in divergences) + \
        " for decay_time/T = 1e-1, 1e-2, 1e-3"


# symplectic

def _hamiltonians() -> list[HamiltonianSpec]:
    rng = np.random.default_rng(SEED)
    a = rng.normal(size=(4, 4))
    return [HamiltonianSpec(kind="free", mass=1.3),
            HamiltonianSpec(kind="harmonic", mass=0.8, omega=1.7),
            HamiltonianSpec(kind="quadratic_form",
                            matrix=tuple(map(tuple, 0.5 * (a + a.T))))]


@check("symplectic")
def check_monodromy_symplectic():
    rng = np.random.default_rng(SEED)
    worst_defect, worst_det = 0.0, 0.0
    for h in _hamiltonians():
        for _ in range(3):
            z0 = classical_flow.PhaseState.from_vector(rng.normal(size=2 * h.dimension))
            m = classical_flow.monodromy(h, z0, 1.0)
            worst_defect = max(worst_defect, classical_flow.symplectic_defect(m))
            worst_det = max(worst_det, abs(np.linalg.det(m) - 1.0))
    ok = worst_defect < 1e-4 and worst_det < 1e-5
    return ok, f"max defect {worst_defect:.1e} (< 1e-4), max |det M - 1| {worst_det:.1e} (< 1e-5)"


@check("symplectic")
def check_monodromy_composition():
    worst = 0.0
    for h in _hamiltonians():
        z0 = classical_flow.PhaseState.from_vector(np.full(2 * h.dimension, 0.3))
        first = classical_flow.monodromy(h, z0, 0.5)
        middle = classical_flow.hamilton_flow(h, z0, 0.0, 0.5, 1e-3)[-1]
        second = classical_flow.monodromy(h, middle, 0.7)
        whole = classical_flow.monodromy(h, z0, 1.2)
        worst = max(worst, float(np.max(np.abs(whole - second @ first))))
    return worst < 1e-4, f"max |M(1.2) - M(0.7) M(0.5)| = {worst:.1e}"


@check("symplectic")
def check_harmonic_energy_bounded():
    h = HamiltonianSpec(kind="harmonic")
    z0 = classical_flow.PhaseState([1.0], [0.0])
    states = classical_flow.hamilton_flow(h, z0, 0.0, 10.0, 1e-4)
    e0 = classical_flow.energy(h, z0)
    drift = max(abs(classical_flow.energy(h, z) - e0) for z in states[::100])
    return drift < 1e-8, f"max |H(z(t)) - H(z0)| over {len(states) - 1} steps = {drift:.1e}"


# determinism

@check("determinism")
def check_identical_dumps():
    from services.commands import write_run_directory
    config = reference_config("two_slit", n_trajectories=200, seed=7)
    with tempfile.TemporaryDirectory() as scratch:
        outputs = []
        for attempt in ("a", "b"):
            target = Path(scratch) / attempt
            write_run_directory(scenarios.run_scenario(config), target)
            outputs.append({p.name: p.read_bytes() for p in sorted(target.iterdir())})
    same = outputs[0] == outputs[1]
    return same, f"{len(outputs[0])} files byte-identical: {same}"
