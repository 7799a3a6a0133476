"""
Process configuration loaded from environment variables.

Everything tunable that is not part of a scene document lives here.
Scene-level knobs (terrain, pipelines, grass, sensor, dataset) live in
`sylva_forge.models.config` and are recorded in every manifest; these
settings only supply the defaults those documents fall back to.
"""

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from sylva_forge import __version__


class ForgeSettings(BaseSettings):
    """Settings loaded from FORGE_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="FORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",  # Ignore extra fields in .env
    )

    # === Runtime ===
    tool_version: str = __version__  # Read from package metadata (pyproject.toml)
    threads: int = Field(default=4, ge=1, description="Default worker cap for parallel stages")
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # === Scene defaults ===
    terrain_spacing: float = Field(default=1.0, gt=0)
    prefab_point_budget: int = Field(default=4096, ge=2)

    # === Sensor defaults ===
    default_gamma: float = 2.0
    camera_altitude_offset: float = 30.0
    noise_sigma: float = Field(default=0.01, ge=0)

    # === Dataset defaults ===
    target_size: int = Field(default=4096, ge=1)
    val_ratio: float = Field(default=0.2, ge=0, lt=1)

    # === Artifact layout ===
    # Pattern: {split}/{scene}_{cluster}.csv
    # Example: train/scene_0001_17.csv
    dataset_path_template: str = "{split}/{scene}_{cluster}.csv"
    manifest_name: str = "manifest.json"


@lru_cache
def get_settings() -> ForgeSettings:
    """Get cached settings instance."""
    return ForgeSettings()
