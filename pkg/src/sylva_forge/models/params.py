"""
Parameter schemas.

Pydantic models that validate and document the knobs of every generator.
Invariants from the module contracts are encoded as field constraints so a
bad document fails before any compute starts.
"""

from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from sylva_forge.core.config import get_settings
from sylva_forge.core.geometry import Rect
from sylva_forge.models.enums import TextureOp, VoronoiMode


class StrictModel(BaseModel):
    """Frozen model that rejects unknown keys and non-finite numbers."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


Range = tuple[float, float]


def _check_range(name: str, value: Range, positive: bool = False) -> None:
    lo, hi = value
    if lo > hi:
        raise ValueError(f"{name} must satisfy lo <= hi, got {value}")
    if positive and lo <= 0:
        raise ValueError(f"{name} must be positive, got {value}")


class FractalParams(StrictModel):
    """Multi-octave gradient-noise parameters."""

    octaves: Annotated[int, Field(ge=1, description="Number of noise layers")] = 5
    lacunarity: Annotated[
        float, Field(gt=1, description="Frequency multiplier per octave")
    ] = 2.0
    persistence: Annotated[
        float, Field(gt=0, le=1, description="Amplitude multiplier per octave")
    ] = 0.5
    base_frequency: Annotated[
        float, Field(gt=0, description="Cycles per meter of the first octave")
    ] = 0.01
    amplitude: Annotated[float, Field(ge=0, description="Meters")] = 8.0

    def amplitude_bound(self) -> float:
        """Analytic bound amplitude * sum(persistence**i) over the octaves."""
        return self.amplitude * sum(self.persistence**i for i in range(self.octaves))


class TerrainParams(FractalParams):
    """Terrain extent, grid and noise."""

    width: Annotated[float, Field(gt=0, description="Extent along x, meters")] = 256.0
    depth: Annotated[float, Field(gt=0, description="Extent along y, meters")] = 256.0
    grid_resolution: Annotated[int, Field(ge=2, description="Vertices per side")] = 257
    seed_label: Annotated[str, Field(min_length=1)] = "terrain"


class DiskParams(StrictModel):
    """Poisson-disk sampling parameters (fixed or texture-modulated radius)."""

    r: Annotated[float | None, Field(gt=0, description="Fixed radius, meters")] = None
    r_min: Annotated[float | None, Field(gt=0)] = None
    r_max: Annotated[float | None, Field(gt=0)] = None
    k: Annotated[int, Field(ge=1, description="Candidate attempts per active point")] = 30
    region: tuple[float, float, float, float] | None = None
    max_count: Annotated[int | None, Field(ge=0)] = None

    @model_validator(mode="after")
    def validate_mode(self) -> "DiskParams":
        """Exactly one of `r` or (`r_min`, `r_max`)."""
        fixed = self.r is not None
        modulated = self.r_min is not None or self.r_max is not None
        if fixed == modulated:
            raise ValueError("Give either r, or both r_min and r_max")
        if modulated:
            if self.r_min is None or self.r_max is None:
                raise ValueError("Modulated sampling needs both r_min and r_max")
            if self.r_min > self.r_max:
                raise ValueError("r_min must be <= r_max")
        if self.region is not None:
            Rect(*self.region)
        return self

    @property
    def modulated(self) -> bool:
        return self.r is None

    def region_rect(self, default: Rect) -> Rect:
        return Rect(*self.region) if self.region is not None else default


class GrassParams(StrictModel):
    """Tile sampling and blade shape."""

    tile_size: Annotated[int, Field(ge=1, description="t_s, pixels")] = 4
    max_per_tile: Annotated[int, Field(ge=0, description="P, anchors per full-density tile")] = 1024
    segments: Annotated[int, Field(ge=1, description="S, blade segments")] = 4
    blade_height: Range = (0.25, 0.6)
    blade_width: Range = (0.01, 0.03)
    jitter: Annotated[float, Field(ge=0, description="Meters per axis")] = 0.05
    max_bend: Annotated[float, Field(ge=0, description="Radians")] = 0.6
    scale_range: Range = (0.8, 1.2)

    @model_validator(mode="after")
    def validate_ranges(self) -> "GrassParams":
        _check_range("blade_height", self.blade_height, positive=True)
        _check_range("blade_width", self.blade_width)
        _check_range("scale_range", self.scale_range, positive=True)
        if self.blade_width[0] < 0:
            raise ValueError("blade_width must be non-negative")
        return self


class PlacementParams(StrictModel):
    """Instancing parameters of a placement node."""

    prefab: Annotated[str, Field(min_length=1)]
    max_twist: Annotated[float, Field(ge=0, description="Radians")] = 0.15
    scale_range: Range = (0.8, 1.25)

    @model_validator(mode="after")
    def validate_scale(self) -> "PlacementParams":
        _check_range("scale_range", self.scale_range, positive=True)
        return self


class NoiseSourceParams(FractalParams):
    """Source node sampling fractal noise."""

    type: Literal["noise"] = "noise"
    width: Annotated[int, Field(ge=1)] = 64
    height: Annotated[int, Field(ge=1)] = 64
    amplitude: Annotated[float, Field(ge=0)] = 1.0


class VoronoiSourceParams(StrictModel):
    """Source node built from a Voronoi diagram."""

    type: Literal["voronoi"] = "voronoi"
    width: Annotated[int, Field(ge=1)] = 64
    height: Annotated[int, Field(ge=1)] = 64
    sites: Annotated[int, Field(ge=1)] = 16
    mode: VoronoiMode = VoronoiMode.DISTANCE


class ConstantSourceParams(StrictModel):
    """Source node with a single value everywhere."""

    type: Literal["constant"] = "constant"
    value: Annotated[float, Field(ge=0, le=1)]
    width: Annotated[int, Field(ge=1)] = 1
    height: Annotated[int, Field(ge=1)] = 1


class FileSourceParams(StrictModel):
    """Source node importing a PGM file (relative to the pipeline document)."""

    type: Literal["file"] = "file"
    path: Annotated[str, Field(min_length=1)]


SourceParams = Annotated[
    NoiseSourceParams | VoronoiSourceParams | ConstantSourceParams | FileSourceParams,
    Field(discriminator="type"),
]


class LogicParams(StrictModel):
    """Logic node operation."""

    op: TextureOp
    t: Annotated[float, Field(ge=0, le=1, description="Threshold level")] = 0.5


class OcclusionParams(StrictModel):
    """Hidden-point-removal parameters."""

    gamma: float = 2.0
    viewpoints: Annotated[list[tuple[float, float, float]], Field(min_length=1)]


class NoiseParams(StrictModel):
    """Isotropic zero-mean measurement noise."""

    sigma: Annotated[float, Field(ge=0, description="Meters per axis")] = 0.01


class ProceduralTreeParams(StrictModel):
    """Parametric tree prefab: cylinder trunk and ellipsoid canopy."""

    trunk_height: Annotated[float, Field(gt=0)] = 6.0
    trunk_radius: Annotated[float, Field(gt=0)] = 0.25
    canopy_radii: tuple[float, float, float] = (2.5, 2.5, 3.5)
    point_budget: int = Field(default_factory=lambda: get_settings().prefab_point_budget, ge=2)

    @model_validator(mode="after")
    def validate_radii(self) -> "ProceduralTreeParams":
        if min(self.canopy_radii) <= 0:
            raise ValueError("canopy_radii must be positive")
        return self


class ProceduralBushParams(StrictModel):
    """Parametric bush prefab: ellipsoid resting on the ground."""

    radii: tuple[float, float, float] = (0.8, 0.8, 0.6)
    point_budget: Annotated[int, Field(ge=1)] = 512

    @model_validator(mode="after")
    def validate_radii(self) -> "ProceduralBushParams":
        if min(self.radii) <= 0:
            raise ValueError("radii must be positive")
        return self
