"""
Configuration settings for the Hankel moments lab
Manages environment variables, numerical tolerances and logging
"""
import sys
from pathlib import Path
from typing import Optional

from loguru import logger
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix HML_)"""

    model_config = SettingsConfigDict(
        env_prefix="HML_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ==================== RANDOMNESS ====================
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    workers: int = Field(1, ge=1)
    block_size: int = Field(500, ge=1)

    # ==================== NUMERICS ====================
    interior_pivot_rtol: float = Field(1e-10, gt=0)
    boundary_band: float = Field(1e-9, gt=0)
    jitter_start: float = Field(1e-12, gt=0)
    jitter_max: float = Field(1e-9, gt=0)
    working_dps: int = Field(60, ge=15)
    quad_tol: float = Field(1e-10, gt=0)

    # ==================== PATHS ====================
    output_dir: Path = Path("./results")

    # ==================== LOGGING ====================
    log_level: str = "INFO"
    log_file: Path = Path("./logs/hml.log")

    def ensure_directories(self) -> None:
        """Create output and log directories"""
        for directory in (self.output_dir, self.log_file.parent):
            directory.mkdir(parents=True, exist_ok=True)


# Global settings instance
settings = Settings()


def setup_logging(level: Optional[str] = None, log_file: Optional[Path] = None) -> None:
    """Route loguru to stderr and a rotating log file"""
    level = (level or settings.log_level).upper()
    logger.remove()
    logger.add(sys.stderr, level=level)
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        logger.add(log_file, rotation="10 MB", retention="1 week", level=level)


def config_summary() -> str:
    """Configuration summary (for debugging)"""
    lines = [
        "=" * 60,
        "Hankel moments lab configuration",
        "=" * 60,
        f"Seed: {settings.seed if settings.seed is not None else '(unset)'}",
        f"Workers: {settings.workers}  block size: {settings.block_size}",
        f"Interior pivot rtol: {settings.interior_pivot_rtol:g}",
        f"K boundary band: {settings.boundary_band:g}",
        f"Extended precision digits: {settings.working_dps}",
        f"Output directory: {settings.output_dir}",
        "=" * 60,
    ]
    return "\n".join(lines)


if __name__ == "__main__":
    print(config_summary())
