from pathlib import Path

import numpy as np
import pytest

from config import settings
from models import GaussianPacket, Grid2D
from services.analytic_states import AnalyticState

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / "configs"


@pytest.fixture(autouse=True)
def _quiet_settings(monkeypatch):
    """Tests never write the run log and always see unbiased velocities."""
    monkeypatch.setattr(settings, "log_dir", "")
    monkeypatch.setattr(settings, "velocity_bias", 1.0)


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def unit_packet() -> GaussianPacket:
    return GaussianPacket(center=(0.0,), sigma0=1.0, k=(0.0,))


@pytest.fixture
def unit_gaussian(unit_packet) -> AnalyticState:
    return AnalyticState.single(unit_packet)


@pytest.fixture
def moving_gaussian() -> AnalyticState:
    return AnalyticState.single(GaussianPacket(center=(-1.0,), sigma0=1.0, k=(1.5,)))


@pytest.fixture
def line_grid() -> Grid2D:
    """Fine grid along x; 1D states are constant along its short y axis."""
    return Grid2D.spanning((-6.0, 6.0), (0.0, 7.0), 513, 8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def shrink():
    """KEY=VALUE overrides that shrink a reference config for fast runs."""

    def overrides(**extra) -> list[str]:
        items = {"n_trajectories": 40, "grid_nx": 16, "grid_ny": 16}
        items.update(extra)
        return [f"{key}={value}" for key, value in items.items()]

    return overrides
