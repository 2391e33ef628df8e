# Static SVG renderings of trajectory fans and Q surfaces

import logging
from pathlib import Path
from typing import Union

import matplotlib
import numpy as np
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure

from config import settings
from models import Ensemble, ScalarField

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Q diverges next to nodes; contour bands span these percentiles
Q_PERCENTILES = (2.0, 98.0)
Q_LEVELS = 16


def _save(figure: Figure, path: PathLike) -> None:
    # Fixed hash salt and no date keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": settings.svg_hashsalt,
                                "svg.fonttype": "none"}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    logger.info(f"Wrote {path}")


def plot_trajectories(ensemble: Ensemble, path: PathLike, title: str = "Trajectories") -> None:
    """One polyline per trajectory: (x1, x2) for 2D ensembles, (t, x1) for 1D."""
    figure = Figure(figsize=(8, 5))
    ax = figure.add_subplot()
    lines = []
    for trajectory in ensemble:
        if trajectory.times.size < 2:
            continue
        if ensemble.dimension >= 2:
            lines.append(trajectory.positions[:, :2])
        else:
            lines.append(np.column_stack([trajectory.times, trajectory.positions[:, 0]]))
    if lines:
        ax.add_collection(LineCollection(lines, linewidths=0.4, colors="tab:blue", alpha=0.5))
        ax.autoscale_view()
    ax.set_xlabel("x1" if ensemble.dimension >= 2 else "t")
    ax.set_ylabel("x2" if ensemble.dimension >= 2 else "x1")
    ax.set_title(title)
    _save(figure, path)


def plot_q_surface(field: ScalarField, path: PathLike, title: str = "Quantum potential") -> None:
    """Filled contour bands of Q; masked points are left blank."""
    figure = Figure(figsize=(8, 5))
    ax = figure.add_subplot()
    grid = field.grid
    data = field.unmasked()
    if data.size:
        lo, hi = np.percentile(data, Q_PERCENTILES)
        if hi > lo:
            values = np.ma.masked_array(np.clip(field.values, lo, hi), mask=field.mask)
            bands = ax.contourf(grid.x, grid.y, values.T,
                                levels=np.linspace(lo, hi, Q_LEVELS + 1), cmap="viridis")
            figure.colorbar(bands, ax=ax, label="Q")
    ax.set_xlim(grid.x[0], grid.x[-1])
    ax.set_ylim(grid.y[0], grid.y[-1])
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    _save(figure, path)
