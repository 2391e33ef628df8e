"""Array-valued snapshots on a Grid2D. All are immutable by convention:
operations return new instances and never write into `psi` or `values`."""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .schemas import Grid2D


def _check_shape(grid: Grid2D, array: np.ndarray, name: str):
    if array.shape != grid.shape:
        raise ValueError(f"{name} has shape {array.shape}, grid is {grid.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} has non-finite entries")


@dataclass(frozen=True)
class WaveField:
    grid: Grid2D
    psi: np.ndarray
    hbar: float = 1.0
    mass: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        _check_shape(self.grid, psi, "psi")
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi)**2) * self.grid.cell_area)

    def with_psi(self, psi: np.ndarray, time: Optional[float] = None) -> "WaveField":
        return replace(self, psi=psi, time=self.time if time is None else time)


@dataclass(frozen=True)
class ScalarField:
    """Real values on a grid. `mask` is True where the value is not meaningful
    (node floor, boundary band); masked values are stored as 0."""

    grid: Grid2D
    values: np.ndarray
    mask: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        mask = (np.zeros(self.grid.shape, dtype=bool)
                if self.mask is None else np.asarray(self.mask, dtype=bool))
        if mask.shape != self.grid.shape:
            raise ValueError("mask shape does not match grid")
        values = np.where(mask, 0.0, np.asarray(self.values, dtype=float))
        _check_shape(self.grid, values, "values")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    def unmasked(self) -> np.ndarray:
        return self.values[~self.mask]

    def max_abs(self) -> float:
        data = self.unmasked()
        return float(np.max(np.abs(data))) if data.size else 0.0


@dataclass(frozen=True)
class VectorField:
    grid: Grid2D
    x: np.ndarray
    y: np.ndarray
    mask: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        mask = (np.zeros(self.grid.shape, dtype=bool)
                if self.mask is None else np.asarray(self.mask, dtype=bool))
        for name in ("x", "y"):
            values = np.where(mask, 0.0, np.asarray(getattr(self, name), dtype=float))
            _check_shape(self.grid, values, name)
            values.setflags(write=False)
            object.__setattr__(self, name, values)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    def component(self, axis: int) -> ScalarField:
        return ScalarField(self.grid, self.x if axis == 0 else self.y, self.mask)
