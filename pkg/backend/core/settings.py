"""
Process-level settings read from the environment or a .env file.
"""

from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Environment settings (prefix FSI_)."""

    model_config = SettingsConfigDict(env_prefix="FSI_", env_file=".env", extra="ignore")

    log_level: str = Field(default="INFO", description="Root log level")
    output_dir: Path = Field(default=Path("runs"), description="Default artifact directory")
    threads: int = Field(default=1, ge=1, description="Default worker count for sweeps")
    host: str = Field(default="0.0.0.0", description="Service bind address")
    port: int = Field(default=8000, ge=1, le=65535, description="Service port")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load settings once per process."""
    load_dotenv()
    return Settings()
