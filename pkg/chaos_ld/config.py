"""Application configuration."""
from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings, read from ``CHAOS_LD_*`` environment variables or ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix="CHAOS_LD_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Application
    app_name: str = "chaos-ld"
    app_version: str = "0.1.0"

    # Paths
    output_dir: Path = Path.cwd() / "runs"

    # Workers (CHAOS_LD_THREADS is the fallback for --threads)
    threads: int = Field(default=1, ge=1)

    # Integrator defaults
    abs_tol: float = Field(default=1e-12, gt=0)
    rel_tol: float = Field(default=1e-12, gt=0)
    max_step: float = Field(default=0.5, gt=0)
    initial_step: float = Field(default=1e-3, gt=0)

    # Indicators
    stencil_sigma: float = Field(default=1e-4, gt=0)
    sali_floor: float = Field(default=1e-14, gt=0)
    sali_sample_ratio: float = Field(default=1.2, gt=1)

    # Logging
    log_level: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
