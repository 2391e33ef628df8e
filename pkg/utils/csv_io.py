# CSV dumps of trajectories and grid fields, plus the key=value run summary

import csv
import logging
import math
from pathlib import Path
from typing import Union

import numpy as np

from models import DumpError, Ensemble, Grid2D, ScalarField, WaveField

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCALAR_HEADER = ["i", "j", "x", "y", "value", "masked"]
WAVEFIELD_HEADER = ["i", "j", "x", "y", "re", "im"]


def fmt(value: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return f"{value:.17g}"


def trajectory_header(dimension: int) -> list[str]:
    return (["traj_id", "t"] + [f"x{a + 1}" for a in range(dimension)] +
            [f"v{a + 1}" for a in range(dimension)] + ["q", "ke", "flag"])


def write_trajectories(path: PathLike, ensemble: Ensemble) -> None:
    """One row per valid sample, grouped by trajectory id, in time order."""
    d = ensemble.dimension
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(trajectory_header(d))
        for i in range(ensemble.size):
            flag = str(int(ensemble.flags[i]))
            for k in range(int(ensemble.lengths[i])):
                writer.writerow([str(i), fmt(ensemble.times[k]),
                                 *(fmt(v) for v in ensemble.positions[k, i]),
                                 *(fmt(v) for v in ensemble.velocities[k, i]),
                                 fmt(ensemble.q[k, i]), fmt(ensemble.ke[k, i]), flag])
    logger.debug(f"Wrote {ensemble.size} trajectories to {path}")


def _open_rows(path: PathLike, expected: list[str] = None):
    path = Path(path)
    if not path.is_file():
        raise DumpError(f"dump not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise DumpError(f"{path}: empty file, expected a header")
    if expected is not None and rows[0] != expected:
        raise DumpError(f"{path}: header {','.join(rows[0])} != {','.join(expected)}")
    return rows[0], rows[1:]


def _number(path, row_number: int, text: str, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise DumpError(f"{path}:{row_number}: malformed number '{text}'")
    if kind is float and not math.isfinite(value):
        raise DumpError(f"{path}:{row_number}: non-finite value '{text}'")
    return value


def read_trajectories(path: PathLike) -> Ensemble:
    header, rows = _open_rows(path)
    d = (len(header) - 5) // 2
    if d < 1 or header != trajectory_header(d):
        raise DumpError(f"{path}: not a trajectory dump (header {','.join(header)})")

    samples: dict[int, list[list[float]]] = {}
    flags: dict[int, int] = {}
    times: set[float] = set()
    for number, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DumpError(f"{path}:{number}: expected {len(header)} columns, got {len(row)}")
        traj = _number(path, number, row[0], int)
        values = [_number(path, number, text) for text in row[1:-1]]
        flags[traj] = _number(path, number, row[-1], int)
        samples.setdefault(traj, []).append(values)
        times.add(values[0])

    ids = sorted(samples)
    if ids and ids != list(range(len(ids))):
        raise DumpError(f"{path}: trajectory ids are not 0..{len(ids) - 1}")
    t = np.array(sorted(times))
    n, n_s = len(ids), t.size
    positions = np.full((n_s, n, d), np.nan)
    velocities = np.full((n_s, n, d), np.nan)
    q = np.full((n_s, n), np.nan)
    ke = np.full((n_s, n), np.nan)
    lengths = np.zeros(n, dtype=int)
    for i in ids:
        block = np.array(samples[i])
        if not np.array_equal(block[:, 0], t[:len(block)]):
            raise DumpError(f"{path}: trajectory {i} does not follow the shared sample times")
        m = len(block)
        positions[:m, i] = block[:, 1:1 + d]
        velocities[:m, i] = block[:, 1 + d:1 + 2 * d]
        q[:m, i] = block[:, 1 + 2 * d]
        ke[:m, i] = block[:, 2 + 2 * d]
        lengths[i] = m
    return Ensemble(times=t, positions=positions, velocities=velocities, q=q, ke=ke,
                    lengths=lengths, flags=np.array([flags[i] for i in ids], dtype=int),
                    source=Path(path).name)


def _grid_rows(grid: Grid2D):
    for i in range(grid.nx):
        for j in range(grid.ny):
            x, y = grid.point(i, j)
            yield i, j, x, y


def write_scalar_field(path: PathLike, field: ScalarField) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SCALAR_HEADER)
        for i, j, x, y in _grid_rows(field.grid):
            writer.writerow([str(i), str(j), fmt(x), fmt(y), fmt(field.values[i, j]),
                             "1" if field.mask[i, j] else "0"])


def write_wavefield(path: PathLike, field: WaveField) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(WAVEFIELD_HEADER)
        for i, j, x, y in _grid_rows(field.grid):
            value = field.psi[i, j]
            writer.writerow([str(i), str(j), fmt(x), fmt(y), fmt(value.real), fmt(value.imag)])


def _grid_table(path, header: list[str]):
    """(grid, value columns) of a row-major grid dump."""
    _, rows = _open_rows(path, header)
    if not rows:
        raise DumpError(f"{path}: no grid points")
    table = []
    for number, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DumpError(f"{path}:{number}: expected {len(header)} columns, got {len(row)}")
        table.append([_number(path, number, row[0], int), _number(path, number, row[1], int)] +
                     [_number(path, number, text) for text in row[2:]])
    data = np.array(table)
    nx, ny = int(data[:, 0].max()) + 1, int(data[:, 1].max()) + 1
    if len(data) != nx * ny:
        raise DumpError(f"{path}: {len(data)} rows do not fill a {nx}x{ny} grid")
    expected_i, expected_j = np.divmod(np.arange(nx * ny), ny)
    if not (np.array_equal(data[:, 0], expected_i) and np.array_equal(data[:, 1], expected_j)):
        raise DumpError(f"{path}: rows are not in row-major order")
    x = data[:, 2].reshape(nx, ny)
    y = data[:, 3].reshape(nx, ny)
    try:
        grid = Grid2D(nx=nx, ny=ny, dx=(x[-1, 0] - x[0, 0]) / (nx - 1),
                      dy=(y[0, -1] - y[0, 0]) / (ny - 1), x0=x[0, 0], y0=y[0, 0])
    except (ValueError, ZeroDivisionError) as exc:
        raise DumpError(f"{path}: not a valid grid ({exc})")
    return grid, data[:, 4:]


def read_scalar_field(path: PathLike) -> ScalarField:
    grid, columns = _grid_table(path, SCALAR_HEADER)
    masked = columns[:, 1]
    if not np.all((masked == 0) | (masked == 1)):
        raise DumpError(f"{path}: masked column must be 0 or 1")
    return ScalarField(grid, columns[:, 0].reshape(grid.shape),
                       masked.reshape(grid.shape).astype(bool))


def read_wavefield(path: PathLike, hbar: float = 1.0, mass: float = 1.0,
                   time: float = 0.0) -> WaveField:
    grid, columns = _grid_table(path, WAVEFIELD_HEADER)
    psi = (columns[:, 0] + 1j * columns[:, 1]).reshape(grid.shape)
    return WaveField(grid, psi, hbar=hbar, mass=mass, time=time)


def write_summary(path: PathLike, summary: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for key, value in summary.items():
            text = fmt(value) if isinstance(value, float) else str(value)
            handle.write(f"{key}={text}\n")


def _scalar(text: str):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            continue
    return text


def read_summary(path: PathLike) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DumpError(f"summary not found: {path}")
    summary = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        key, sep, value = line.partition("=")
        if not sep or not key:
            raise DumpError(f"{path}:{number}: expected key=value")
        summary[key] = _scalar(value)
    return summary
