import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, computed_field,
                      field_validator, model_validator)


class Grid2D(BaseModel):
    """Uniform grid; point (i, j) sits at (x0 + i*dx, y0 + j*dy)."""

    model_config = ConfigDict(frozen=True)

    nx: int = Field(..., ge=8)
    ny: int = Field(..., ge=8)
    dx: float = Field(..., gt=0)
    dy: float = Field(..., gt=0)
    x0: float = 0.0
    y0: float = 0.0

    @classmethod
    def spanning(cls, x_range: tuple[float, float], y_range: tuple[float, float],
                 nx: int, ny: int) -> "Grid2D":
        """Grid whose first and last points sit on the range ends."""
        (xa, xb), (ya, yb) = x_range, y_range
        return cls(nx=nx, ny=ny, dx=(xb - xa) / (nx - 1), dy=(yb - ya) / (ny - 1),
                   x0=xa, y0=ya)

    @classmethod
    def periodic(cls, x_range: tuple[float, float], y_range: tuple[float, float],
                 nx: int, ny: int) -> "Grid2D":
        """Grid for a periodic box: the right edge is the image of the left."""
        (xa, xb), (ya, yb) = x_range, y_range
        return cls(nx=nx, ny=ny, dx=(xb - xa) / nx, dy=(yb - ya) / ny, x0=xa, y0=ya)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    @property
    def lengths(self) -> tuple[float, float]:
        return (self.nx * self.dx, self.ny * self.dy)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays indexed [i, j]."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    def point(self, i: int, j: int) -> tuple[float, float]:
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise IndexError(f"grid index ({i}, {j}) outside {self.shape}")
        return (self.x0 + i * self.dx, self.y0 + j * self.dy)

    def index(self, x: float, y: float) -> tuple[int, int]:
        """Inverse of point() for coordinates on the lattice."""
        i = int(round((x - self.x0) / self.dx))
        j = int(round((y - self.y0) / self.dy))
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise IndexError(f"({x}, {y}) outside grid")
        return (i, j)


class GaussianPacket(BaseModel):
    """Free Gaussian packet; center and k share the configuration dimension."""

    model_config = ConfigDict(frozen=True)

    center: tuple[float, ...]
    sigma0: float = Field(..., gt=0)
    k: tuple[float, ...]
    hbar: float = Field(default=1.0, gt=0)
    mass: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def check_dimension(self):
        if len(self.center) == 0 or len(self.center) != len(self.k):
            raise ValueError("center and k must have the same nonzero length")
        return self

    @property
    def dimension(self) -> int:
        return len(self.center)


class PlaneWave(BaseModel):
    """Unit-modulus plane wave exp(i(k.x - hbar k^2 t / 2m))."""

    model_config = ConfigDict(frozen=True)

    k: tuple[float, ...]
    hbar: float = Field(default=1.0, gt=0)
    mass: float = Field(default=1.0, gt=0)

    @field_validator("k")
    @classmethod
    def check_k(cls, value):
        if len(value) == 0:
            raise ValueError("k must be non-empty")
        return value

    @property
    def dimension(self) -> int:
        return len(self.k)


class HamiltonianSpec(BaseModel):
    """Quadratic Hamiltonian.

    free: H = p.p / 2m; harmonic: H = p.p / 2m + m w^2 x.x / 2;
    quadratic_form: H = z^T A z / 2 with z = (x, p) and A symmetric.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["free", "harmonic", "quadratic_form"]
    mass: float = Field(default=1.0, gt=0)
    omega: float = Field(default=1.0, ge=0)
    matrix: Optional[tuple[tuple[float, ...], ...]] = None
    dof: int = Field(default=1, ge=1)  # free and harmonic only

    @model_validator(mode="after")
    def check_matrix(self):
        if self.kind != "quadratic_form":
            return self
        if self.matrix is None:
            raise ValueError("quadratic_form requires matrix")
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise ValueError("matrix must be square with even dimension")
        if not np.allclose(a, a.T, rtol=0, atol=1e-12):
            raise ValueError("matrix must be symmetric")
        return self

    @property
    def dimension(self) -> int:
        if self.matrix is not None:
            return len(self.matrix) // 2
        return self.dof


class EnergySplit(BaseModel):
    """Particle energy split into kinetic, quantum-potential and external parts."""

    model_config = ConfigDict(frozen=True)

    ke: float
    qpe: float
    v: float

    @computed_field
    @property
    def total(self) -> float:
        return self.ke + self.qpe + self.v


# Scenario configs. Every key is mandatory.

class _ScenarioBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    hbar: float = Field(..., gt=0)
    mass: float = Field(..., gt=0)
    seed: int = Field(..., ge=0)
    n_trajectories: int = Field(..., ge=1)
    dt: float = Field(..., gt=0)
    t_final: float = Field(..., gt=0)
    record_every: int = Field(..., ge=1)
    grid_nx: int = Field(..., ge=8)
    grid_ny: int = Field(..., ge=8)


class TwoSlitConfig(_ScenarioBase):
    name: Literal["two_slit"]
    slit_half_separation: float = Field(..., gt=0)
    sigma0: float = Field(..., gt=0)
    k_forward: float = Field(..., gt=0)


class AharonovBohmConfig(_ScenarioBase):
    name: Literal["aharonov_bohm"]
    slit_half_separation: float = Field(..., gt=0)
    sigma0: float = Field(..., gt=0)
    k_forward: float = Field(..., gt=0)
    flux_phase: float = Field(..., ge=0, lt=2 * math.pi)


class ClassicalLimitConfig(_ScenarioBase):
    name: Literal["classical_limit"]
    sigma0: float = Field(..., gt=0)
    center: float
    k: float
    decay_time: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_step(self):
        # dt == decay_time / 10 is allowed up to rounding
        if self.dt > self.decay_time / 10.0 * (1.0 + 1e-9):
            raise ValueError("dt must resolve the damping: dt <= decay_time / 10")
        return self


class TwoBodyConfig(_ScenarioBase):
    name: Literal["two_body"]
    half_separation: float = Field(..., gt=0)
    sigma0: float = Field(..., gt=0)
    k: float
    probe_x1: float
    probe_x2_ref: float
    probe_time: float = Field(..., ge=0)
    sweep_points: int = Field(..., ge=3)


class StateEnsembleConfig(_ScenarioBase):
    name: Literal["state_ensemble"]
    state_file: str = Field(..., min_length=1)


ScenarioConfig = Annotated[Union[TwoSlitConfig, AharonovBohmConfig,
                                 ClassicalLimitConfig, TwoBodyConfig,
                                 StateEnsembleConfig],
                           Field(discriminator="name")]


class Command(BaseModel):
    """One CLI invocation."""

    model_config = ConfigDict(frozen=True)

    subcommand: Literal["run", "validate", "plot"]
    config: Optional[str] = None
    out: Optional[str] = None
    overrides: tuple[str, ...] = ()
    only: Optional[str] = None
