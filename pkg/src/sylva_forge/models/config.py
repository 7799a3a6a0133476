"""
Scene configuration documents.

A scene document is JSON. It is validated in full before any compute starts
and dumped with every default filled in into the manifests of the artifacts
it produces.
"""

import json
import logging
from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import Field, ValidationError, model_validator

from sylva_forge.core.config import get_settings
from sylva_forge.core.exceptions import ArtifactIOError, ConfigError
from sylva_forge.core.rng import SEED_MAX
from sylva_forge.models.enums import Category, DatasetMode, Label
from sylva_forge.models.params import (
    GrassParams,
    ProceduralBushParams,
    ProceduralTreeParams,
    SourceParams,
    StrictModel,
    TerrainParams,
)

logger = logging.getLogger(__name__)


class FilePrefabSpec(StrictModel):
    """Prefab loaded from an `x,y,z,label` CSV (relative to the scene document)."""

    type: Literal["file"] = "file"
    path: Annotated[str, Field(min_length=1)]


class TreePrefabSpec(ProceduralTreeParams):
    type: Literal["tree"] = "tree"


class BushPrefabSpec(ProceduralBushParams):
    type: Literal["bush"] = "bush"


PrefabSpec = Annotated[
    FilePrefabSpec | TreePrefabSpec | BushPrefabSpec,
    Field(discriminator="type"),
]


class GrassConfig(StrictModel):
    """Grass layer: a density texture stretched over the terrain plus blade params."""

    density: SourceParams
    params: GrassParams = GrassParams()


class SensorConfig(StrictModel):
    """Camera-like occlusion settings shared by `forge occlude` and camera datasets."""

    gamma: float = Field(default_factory=lambda: get_settings().default_gamma)
    altitude_offset: float = Field(
        default_factory=lambda: get_settings().camera_altitude_offset,
        description="Meters above the highest point of the cloud",
    )
    grid: tuple[float, float] | None = Field(
        default=None,
        description="Survey spacing (sx, sy) in meters; null means one centered viewpoint",
    )

    @model_validator(mode="after")
    def validate_grid(self) -> "SensorConfig":
        if self.grid is not None and min(self.grid) <= 0:
            raise ValueError("grid spacings must be positive")
        return self


class DatasetConfig(StrictModel):
    """Subcloud assembly settings."""

    mode: DatasetMode = DatasetMode.LIDAR
    target_size: int = Field(default_factory=lambda: get_settings().target_size, ge=1)
    val_ratio: float = Field(default_factory=lambda: get_settings().val_ratio, ge=0, lt=1)
    noise_sigma: float = Field(default_factory=lambda: get_settings().noise_sigma, ge=0)
    normalize: bool = False
    category_map: dict[str, str] | None = Field(
        default=None,
        description="Label slug -> category slug overrides on top of the default map",
    )
    kmeans_max_iter: int = Field(default=100, ge=1)
    kmeans_tol: float = Field(default=1e-4, ge=0)

    @model_validator(mode="after")
    def validate_category_map(self) -> "DatasetConfig":
        for label, category in (self.category_map or {}).items():
            Label.from_slug(label)
            Category.from_slug(category)
        return self


class SceneConfig(StrictModel):
    """Everything needed to rebuild one scene from a seed."""

    seed: int = Field(default=0, ge=0, le=SEED_MAX)
    terrain: TerrainParams = TerrainParams()
    terrain_spacing: float = Field(default_factory=lambda: get_settings().terrain_spacing, gt=0)
    pipelines: list[str | dict[str, Any]] = Field(
        default_factory=list,
        description="Pipeline document paths or inline {'nodes': [...]} documents",
    )
    prefabs: dict[str, PrefabSpec] = Field(
        default_factory=dict,
        description="Prefab registry additions; built-in procedural prefabs are always present",
    )
    grass: GrassConfig | None = None
    sensor: SensorConfig = Field(default_factory=SensorConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)


def parse_scene_config(text: str, source: str = "<config>") -> SceneConfig:
    """Validate a scene document; every failure becomes a ConfigError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    try:
        return SceneConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{source}: {e}") from e


def load_scene_config(path: Path) -> SceneConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"Cannot read config {path}: {e}") from e
    config = parse_scene_config(text, source=str(path))
    logger.info(
        f"Scene config loaded: path={path.name} pipelines={len(config.pipelines)} "
        f"prefabs={len(config.prefabs)} grass={config.grass is not None}"
    )
    return config


def resolve_relative(reference: str, base_dir: Path) -> Path:
    """Paths inside documents are relative to the document that names them."""
    candidate = Path(reference)
    return candidate if candidate.is_absolute() else base_dir / candidate
