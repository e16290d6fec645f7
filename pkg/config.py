"""
Tailwise — Configuration via pydantic-settings
"""
from pydantic_settings import BaseSettings
from pydantic import model_validator


class Settings(BaseSettings):
    # Monte Carlo
    mc_sample_count: int = 1_000_000
    mc_seed: int = 20_240_601
    mc_streams: int = 4
    mc_max_samples: int = 10_000_000
    nr_mc_sample_count: int = 10_000

    # Sweeps
    grid_points: int = 200
    sweep_alpha_max: float = 0.9999
    table1_alpha_max: float = 0.998

    # Quadrature
    quad_tolerance: float = 1e-12
    quad_horizon: float = 40.0
    quad_cap: float = 45.0

    # Output
    csv_digits: int = 10
    singular_marker: str = "SINGULAR"

    # App
    environment: str = "production"
    debug: bool = False
    port: int = 8000

    model_config = {"env_file": ".env", "env_file_encoding": "utf-8", "env_prefix": "TAILWISE_"}

    @model_validator(mode="after")
    def check_ranges(self):
        """Reject windows and counts the engines cannot work with."""
        for name in ("sweep_alpha_max", "table1_alpha_max"):
            value = getattr(self, name)
            if not 0.95 < value < 1.0:
                raise ValueError(f"{name} must lie in (0.95, 1), got {value}")
        for name in ("mc_sample_count", "mc_streams", "nr_mc_sample_count", "grid_points"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.mc_sample_count > self.mc_max_samples:
            self.mc_sample_count = self.mc_max_samples
        if self.quad_cap <= 0 or self.quad_horizon <= 0 or self.quad_tolerance <= 0:
            raise ValueError("quadrature settings must be positive")
        return self


settings = Settings()
