"""Configuration management for the OS-decoding latency workbench."""

from typing import Literal
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    """Workbench settings with URLLC_-prefixed environment variable support."""

    # Logging
    log_level: str = Field("INFO")

    # Simulation
    workers: int = Field(1, ge=1)
    batch_size: int = Field(256, ge=1)  # trials per work unit
    target_errors: int = Field(100, ge=1)
    max_trials: int = Field(10_000_000, ge=1)
    bracket_tol_db: float = Field(0.05, gt=0)
    search_lo_db: float = -10.0
    search_hi_db: float = 20.0

    # Decoder complexity accounting
    quantization_bits: int = Field(8, ge=1)
    order_step: float = Field(0.01, gt=0)

    # Finite-blocklength quadrature
    quadrature_nodes: int = Field(256, ge=8)

    # Optimizers
    n_max_cap: int = Field(4096, ge=1)
    model_interpolation: Literal["nearest", "linear"] = "nearest"

    model_config = SettingsConfigDict(
        env_prefix="URLLC_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

# Global settings instance
settings = Settings()
