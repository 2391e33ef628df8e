# CLI operations: run a scenario, validate, plot a run directory

import logging
import shutil
import tempfile
from pathlib import Path

from models import Command, ConfigError
from services import scenarios, validation
from services.scenarios import RunResult
from utils.config_file import load_scenario_config
from utils.csv_io import (read_scalar_field, read_trajectories, write_scalar_field,
                          write_summary, write_trajectories, write_wavefield)
from utils.svg_plot import plot_q_surface, plot_trajectories

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.txt"
DEFAULT_RUNS = Path("runs")


def _suffixed(stem: str, suffix: str) -> str:
    return f"{stem}_{suffix}.csv" if suffix else f"{stem}.csv"


def write_run_directory(result: RunResult, out: Path) -> None:
    """Write every dump to a sibling temp directory, then rename it into place.

    An existing `out` is replaced only when it is empty or holds a previous
    run (a summary.txt).
    """
    out = Path(out)
    if out.exists():
        if not out.is_dir():
            raise ConfigError(f"--out {out} exists and is not a directory", key="out")
        if any(out.iterdir()) and not (out / SUMMARY_FILE).is_file():
            raise ConfigError(f"--out {out} is not empty and is not a run directory", key="out")
    out.parent.mkdir(parents=True, exist_ok=True)

    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        for suffix, ensemble in result.ensembles.items():
            write_trajectories(staging / _suffixed("trajectories", suffix), ensemble)
        for suffix, field in result.fields.items():
            write_scalar_field(staging / _suffixed("q_surface", suffix), field)
        for suffix, wavefield in result.wavefields.items():
            write_wavefield(staging / _suffixed("wavefield", suffix), wavefield)
        write_summary(staging / SUMMARY_FILE, result.summary)
        if out.exists():
            shutil.rmtree(out)
        staging.rename(out)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    logger.info(f"Wrote run directory {out}")


def run(cmd: Command) -> int:
    if not cmd.config:
        raise ConfigError("run needs --config", key="config")
    # without --out the run lands in runs/<config name>
    out = Path(cmd.out) if cmd.out else DEFAULT_RUNS / Path(cmd.config).stem
    config = load_scenario_config(cmd.config, cmd.overrides)
    result = scenarios.run_scenario(config, base_dir=Path(cmd.config).parent)
    write_run_directory(result, out)
    for key, value in result.summary.items():
        logger.debug(f"summary {key} = {value}")
    return 0


def validate(cmd: Command) -> int:
    results = validation.run_checks(cmd.only)
    print(validation.format_table(results))
    failed = [r for r in results if not r.passed]
    if failed:
        logger.error(f"validate: {len(failed)} of {len(results)} checks failed")
        return 1
    logger.info(f"validate: all {len(results)} checks passed")
    return 0


def plot(cmd: Command) -> int:
    """Render trajectories.svg and q_surface.svg from a run directory's dumps."""
    if not cmd.out:
        raise ConfigError("plot needs a run directory", key="out")
    run_dir = Path(cmd.out)
    ensemble = read_trajectories(run_dir / "trajectories.csv")
    surface = read_scalar_field(run_dir / "q_surface.csv")
    plot_trajectories(ensemble, run_dir / "trajectories.svg", title=f"Trajectories: {run_dir.name}")
    plot_q_surface(surface, run_dir / "q_surface.svg", title=f"Quantum potential: {run_dir.name}")
    return 0


HANDLERS = {"run": run, "validate": validate, "plot": plot}


def execute(cmd: Command) -> int:
    return HANDLERS[cmd.subcommand](cmd)
