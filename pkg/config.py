from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class Settings(BaseSettings):
    # Units (scenario configs state their own; these are library defaults)
    hbar: float = Field(default=1.0, gt=0)
    mass: float = Field(default=1.0, gt=0)

    # Numerics
    node_floor: float = Field(default=1e-8, gt=0)
    absorbing_fraction: float = Field(default=0.1, ge=0, lt=0.5)
    residual_support: float = Field(default=1e-3, gt=0, lt=1)

    # Logging
    log_level: str = "INFO"
    log_dir: str = "logs"  # empty string disables the file handler

    # Test hook for `validate`: multiplies every guidance velocity
    velocity_bias: float = 1.0

    # Plots
    svg_hashsalt: str = "bohm-trajectories"

    model_config = SettingsConfigDict(env_file=".env",
                                      env_prefix="BOHM_",
                                      case_sensitive=False,
                                      extra="ignore")


settings = Settings()
