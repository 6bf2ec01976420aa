from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App Settings
    app_name: str = "Hedge Tenor Optimizer"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"

    # Output
    output_dir: Path = Path("output")

    # Simulation
    default_seed: int = 20180831
    max_workers: int = 1
    path_chunk_size: int = 250
    steady_state_start: int = 36

    # Reporting
    cash_scale: float = 100.0
    hedge_tolerance: float = 1e-9

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="HEDGE_",
        extra="ignore",
    )


# Instantiate settings
settings = Settings()
