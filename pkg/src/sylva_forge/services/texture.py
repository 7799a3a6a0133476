"""
Greyscale control textures.

A texture is an H x W array of values in [0, 1] stretched over a world
rectangle. Row r covers y in [y0 + r*dy, y0 + (r+1)*dy), column c covers x
likewise; samples are taken at pixel centers. Values stay float internally
and are only quantized to 8 bits by the PGM writer.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.spatial import cKDTree

from sylva_forge.core.exceptions import ArtifactIOError, ForgeValidationError
from sylva_forge.core.geometry import Rect
from sylva_forge.core.rng import RngStream
from sylva_forge.models.enums import TextureOp, VoronoiMode
from sylva_forge.models.params import FractalParams
from sylva_forge.services.terrain import fbm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Texture:
    """Immutable H x W grid of values in [0, 1] mapped onto `extent`."""

    values: np.ndarray
    extent: Rect

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or min(values.shape) < 1:
            raise ForgeValidationError(f"Texture needs a non-empty 2D array, got shape {values.shape}")
        if not np.isfinite(values).all() or values.min() < 0.0 or values.max() > 1.0:
            raise ForgeValidationError("Texture values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """World coordinates of pixel centers as (H, W) grids."""
        e = self.extent
        xs = e.x0 + (np.arange(self.width) + 0.5) / self.width * e.width
        ys = e.y0 + (np.arange(self.height) + 0.5) / self.height * e.depth
        return np.meshgrid(xs, ys)


def pixel_extent(w: int, h: int) -> Rect:
    """Default mapping: one world unit per pixel."""
    return Rect(0.0, 0.0, float(w), float(h))


def _check_size(w: int, h: int) -> None:
    if w < 1 or h < 1:
        raise ForgeValidationError(f"Texture dimensions must be >= 1, got {w}x{h}")


def constant_texture(value: float, w: int = 1, h: int = 1, extent: Rect | None = None) -> Texture:
    _check_size(w, h)
    return Texture(np.full((h, w), float(value)), extent or pixel_extent(w, h))


def texture_from_noise(
    w: int,
    h: int,
    p: FractalParams,
    seed: int,
    extent: Rect | None = None,
) -> Texture:
    """fbm at pixel centers mapped affinely from [-A, A] to [0, 1], A the amplitude bound."""
    _check_size(w, h)
    texture_extent = extent or pixel_extent(w, h)
    gx, gy = Texture(np.zeros((h, w)), texture_extent).pixel_centers()
    bound = p.amplitude_bound()
    if bound == 0.0:
        return Texture(np.full((h, w), 0.5), texture_extent)
    values = (fbm(gx, gy, p, seed) + bound) / (2.0 * bound)
    return Texture(np.clip(values, 0.0, 1.0), texture_extent)


def texture_from_voronoi(
    w: int,
    h: int,
    sites: int,
    seed: int,
    mode: VoronoiMode = VoronoiMode.DISTANCE,
    extent: Rect | None = None,
) -> Texture:
    """
    Voronoi diagram over pixel space with sites at distinct random pixels.

    distance: distance to the nearest site divided by the largest such distance.
    cellular: every pixel takes a random value drawn once per site.
    """
    _check_size(w, h)
    if sites < 1:
        raise ForgeValidationError(f"Voronoi texture needs at least one site, got {sites}")
    stream = RngStream.root(seed).derive("voronoi")
    n_sites = min(sites, w * h)
    flat_sites = stream.generator.choice(w * h, size=n_sites, replace=False)
    site_xy = np.column_stack([flat_sites % w, flat_sites // w]).astype(np.float64)

    cols, rows = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pixels = np.column_stack([cols.ravel(), rows.ravel()])
    distance, nearest = cKDTree(site_xy).query(pixels)

    if VoronoiMode(mode) is VoronoiMode.CELLULAR:
        site_values = stream.generator.random(n_sites)
        values = site_values[nearest]
    else:
        far = distance.max()
        values = distance / far if far > 0 else np.zeros_like(distance)
    return Texture(values.reshape(h, w), extent or pixel_extent(w, h))


def texture_logic(op: TextureOp, a: Texture, b: Texture | None = None, t: float = 0.5) -> Texture:
    """Pixelwise operation; the result is clamped to [0, 1] and keeps `a`'s extent."""
    op = TextureOp(op)
    if op.is_unary:
        if b is not None:
            raise ForgeValidationError(f"'{op.value}' takes one texture, got two")
    else:
        if b is None:
            raise ForgeValidationError(f"'{op.value}' takes two textures, got one")
        if a.shape != b.shape:
            raise ForgeValidationError(
                f"Texture dimensions differ for '{op.value}': {a.width}x{a.height} vs {b.width}x{b.height}"
            )

    match op:
        case TextureOp.INVERT:
            values = 1.0 - a.values
        case TextureOp.THRESHOLD:
            values = np.where(a.values >= t, 1.0, 0.0)
        case TextureOp.MULTIPLY:
            values = a.values * b.values
        case TextureOp.MIN:
            values = np.minimum(a.values, b.values)
        case TextureOp.MAX:
            values = np.maximum(a.values, b.values)
        case TextureOp.ADD_CLAMPED:
            values = a.values + b.values
    return Texture(np.clip(values, 0.0, 1.0), a.extent)


def _pixel_coordinate(world: np.ndarray, origin: float, size: float, n: int) -> np.ndarray:
    if size == 0.0:
        return np.zeros_like(world)
    # Clamp to edge: outside queries read the border pixels
    return np.clip((world - origin) / size * n - 0.5, 0.0, n - 1.0)


def sample_texture(t: Texture, x, y):
    """Bilinear lookup between pixel centers; scalars in, float out."""
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    px = _pixel_coordinate(x, t.extent.x0, t.extent.width, t.width)
    py = _pixel_coordinate(y, t.extent.y0, t.extent.depth, t.height)

    c0 = np.minimum(np.floor(px).astype(np.int64), max(t.width - 2, 0))
    r0 = np.minimum(np.floor(py).astype(np.int64), max(t.height - 2, 0))
    c1 = np.minimum(c0 + 1, t.width - 1)
    r1 = np.minimum(r0 + 1, t.height - 1)
    fx = px - c0
    fy = py - r0

    v = t.values
    value = (
        (1 - fx) * (1 - fy) * v[r0, c0]
        + fx * (1 - fy) * v[r0, c1]
        + (1 - fx) * fy * v[r1, c0]
        + fx * fy * v[r1, c1]
    )
    value = np.clip(value, 0.0, 1.0)
    return float(value[0]) if scalar else value


def write_pgm(t: Texture, path: Path) -> None:
    """Binary P5, maxval 255; row 0 of the texture is the first row of the file."""
    quantized = np.round(t.values * 255.0).astype(np.uint8)
    try:
        Image.fromarray(quantized).save(Path(path), format="PPM")
    except OSError as e:
        raise ArtifactIOError(f"Cannot write texture {path}: {e}") from e
    logger.debug(f"Texture written: path={Path(path).name} size={t.width}x{t.height}")


def read_pgm(path: Path, extent: Rect | None = None) -> Texture:
    """8-bit greyscale PGM; value v maps to v/255."""
    try:
        with Image.open(Path(path)) as img:
            if img.mode != "L":
                raise ArtifactIOError(f"{path}: expected 8-bit greyscale PGM, got mode {img.mode}")
            values = np.asarray(img, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, ValueError) as e:
        raise ArtifactIOError(f"{path}: not a PGM image: {e}") from e
    except ArtifactIOError:
        raise
    except OSError as e:
        raise ArtifactIOError(f"Cannot read texture {path}: {e}") from e
    h, w = values.shape
    return Texture(values, extent or pixel_extent(w, h))
