from .schemas import (
    Grid2D,
    GaussianPacket,
    PlaneWave,
    HamiltonianSpec,
    EnergySplit,
    TwoSlitConfig,
    AharonovBohmConfig,
    ClassicalLimitConfig,
    TwoBodyConfig,
    StateEnsembleConfig,
    ScenarioConfig,
    Command,
)
from .fields import WaveField, ScalarField, VectorField
from .ensemble import Trajectory, Ensemble, FLAG_OK, FLAG_TRUNCATED
from .errors import (
    BohmError,
    ConfigError,
    DumpError,
    NumericalError,
    ZeroNorm,
    UnstableStep,
    NodeProximity,
    PhaseWrap,
    DimensionError,
)

__all__ = [
    "Grid2D",
    "GaussianPacket",
    "PlaneWave",
    "HamiltonianSpec",
    "EnergySplit",
    "TwoSlitConfig",
    "AharonovBohmConfig",
    "ClassicalLimitConfig",
    "TwoBodyConfig",
    "StateEnsembleConfig",
    "ScenarioConfig",
    "Command",
    "WaveField",
    "ScalarField",
    "VectorField",
    "Trajectory",
    "Ensemble",
    "FLAG_OK",
    "FLAG_TRUNCATED",
    "BohmError",
    "ConfigError",
    "DumpError",
    "NumericalError",
    "ZeroNorm",
    "UnstableStep",
    "NodeProximity",
    "PhaseWrap",
    "DimensionError",
]
