"""
Terrain heightmaps from multi-octave gradient noise.

Gradients are not taken from a fixed permutation table: each lattice corner
hashes (seed, ix, iy) into an angle, so every seed yields a different noise
field through the same code path.
"""

import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sylva_forge.core.exceptions import ArtifactIOError, DomainError
from sylva_forge.core.geometry import Rect
from sylva_forge.core.parallel import chunk_bounds, parallel_map
from sylva_forge.core.rng import RngStream, as_uint64, derive_seed, mix64, unit_interval
from sylva_forge.models.cloud import TERRAIN_INSTANCE_ID, LabeledPointCloud
from sylva_forge.models.enums import Label
from sylva_forge.models.params import FractalParams, TerrainParams

logger = logging.getLogger(__name__)

HEIGHTMAP_MAGIC = b"SYLVHM01"
_HEADER = struct.Struct("<8sIdd")
CHUNK_ROWS = 16


@dataclass(frozen=True)
class Heightmap:
    """Square grid of elevations; row i runs along y, column j along x."""

    width: float
    depth: float
    heights: np.ndarray
    params: TerrainParams | None = None

    @property
    def resolution(self) -> int:
        return self.heights.shape[0]

    @property
    def extent(self) -> Rect:
        return Rect(0.0, 0.0, self.width, self.depth)

    def vertex_axes(self) -> tuple[np.ndarray, np.ndarray]:
        """World x of each column and world y of each row."""
        n = self.resolution
        return np.linspace(0.0, self.width, n), np.linspace(0.0, self.depth, n)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _gradients(ix: np.ndarray, iy: np.ndarray, seed_bits: np.uint64) -> tuple[np.ndarray, np.ndarray]:
    h = mix64(seed_bits ^ mix64(as_uint64(ix) ^ mix64(as_uint64(iy))))
    angle = unit_interval(h) * (2.0 * math.pi)
    return np.cos(angle), np.sin(angle)


def perlin2(x, y, seed: int):
    """
    Classic 2D gradient noise with unit gradients and quintic fade.

    Accepts scalars or arrays. Values lie in [-sqrt(2)/2, sqrt(2)/2] and
    vanish on the integer lattice.
    """
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    x, y = np.broadcast_arrays(x, y)

    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    seed_bits = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def corner(dx: int, dy: int) -> np.ndarray:
        gx, gy = _gradients(ix + dx, iy + dy, seed_bits)
        return gx * (fx - dx) + gy * (fy - dy)

    u = _fade(fx)
    v = _fade(fy)
    bottom = corner(0, 0) + u * (corner(1, 0) - corner(0, 0))
    top = corner(0, 1) + u * (corner(1, 1) - corner(0, 1))
    value = bottom + v * (top - bottom)
    return float(value[0]) if scalar else value


def fbm(x, y, p: FractalParams, seed: int):
    """Fractal sum of `p.octaves` perlin layers, one derived seed per octave."""
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    total = np.zeros(np.broadcast_shapes(x.shape, y.shape))
    frequency = p.base_frequency
    weight = 1.0
    for octave in range(p.octaves):
        octave_seed = derive_seed(seed, f"octave-{octave}")
        total = total + weight * perlin2(x * frequency, y * frequency, octave_seed)
        frequency *= p.lacunarity
        weight *= p.persistence
    total = p.amplitude * total
    return float(total) if scalar else total


def generate_heightmap(p: TerrainParams, seed: int, workers: int | None = None) -> Heightmap:
    """
    Evaluate fbm at every grid vertex, row chunks in parallel.

    Args:
        p: Terrain parameters.
        seed: Selects the gradient tables.
        workers: Threads over row chunks; the result does not depend on it.

    Returns:
        Heightmap of grid_resolution x grid_resolution vertices.
    """
    n = p.grid_resolution
    xs = np.linspace(0.0, p.width, n)
    ys = np.linspace(0.0, p.depth, n)

    def rows(span: tuple[int, int]) -> np.ndarray:
        start, stop = span
        gx, gy = np.meshgrid(xs, ys[start:stop])
        return fbm(gx, gy, p, seed)

    spans = chunk_bounds(n, math.ceil(n / CHUNK_ROWS))
    heights = np.vstack(parallel_map(rows, spans, workers))
    logger.info(
        f"Heightmap generated: resolution={n} extent={p.width}x{p.depth}m "
        f"range=[{heights.min():.3f}, {heights.max():.3f}]"
    )
    return Heightmap(width=p.width, depth=p.depth, heights=heights, params=p)


def heights_at(hm: Heightmap, x, y) -> np.ndarray:
    """Bilinear interpolation of the grid at arrays of world positions."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    outside = (x < 0) | (x > hm.width) | (y < 0) | (y > hm.depth) | ~np.isfinite(x + y)
    if outside.any():
        i = int(np.flatnonzero(outside)[0])
        raise DomainError(
            f"Query ({x[i]}, {y[i]}) outside terrain extent [0, {hm.width}] x [0, {hm.depth}]"
        )
    last = hm.resolution - 1
    fx = x / hm.width * last
    fy = y / hm.depth * last
    j0 = np.clip(np.floor(fx).astype(np.int64), 0, last - 1)
    i0 = np.clip(np.floor(fy).astype(np.int64), 0, last - 1)
    tx = fx - j0
    ty = fy - i0
    h = hm.heights
    return (
        (1 - tx) * (1 - ty) * h[i0, j0]
        + tx * (1 - ty) * h[i0, j0 + 1]
        + (1 - tx) * ty * h[i0 + 1, j0]
        + tx * ty * h[i0 + 1, j0 + 1]
    )


def height_at(hm: Heightmap, x: float, y: float) -> float:
    """Terrain elevation below (x, y); raises DomainError outside the extent."""
    return float(heights_at(hm, x, y)[0])


def _axis_samples(extent: float, spacing: float) -> np.ndarray:
    count = max(2, math.floor(extent / spacing + 1e-9) + 1)
    return np.minimum(np.arange(count) * spacing, extent)


def terrain_points(hm: Heightmap, spacing: float, seed: int) -> LabeledPointCloud:
    """Jittered regular surface samples labeled terrain."""
    if spacing <= 0:
        raise DomainError(f"Terrain spacing must be positive, got {spacing}")
    gx, gy = np.meshgrid(_axis_samples(hm.width, spacing), _axis_samples(hm.depth, spacing))
    xy = np.column_stack([gx.ravel(), gy.ravel()])

    stream = RngStream.root(seed).derive("terrain-points")
    jitter = stream.generator.uniform(-spacing / 4, spacing / 4, size=xy.shape)
    xy = xy + jitter
    xy[:, 0] = np.clip(xy[:, 0], 0.0, hm.width)
    xy[:, 1] = np.clip(xy[:, 1], 0.0, hm.depth)

    z = heights_at(hm, xy[:, 0], xy[:, 1])
    xyz = np.column_stack([xy, z])
    return LabeledPointCloud.uniform(xyz, Label.TERRAIN, TERRAIN_INSTANCE_ID)


def write_heightmap(hm: Heightmap, path: Path) -> None:
    """SYLVHM01: magic, u32 resolution, f64 width, f64 depth, f32 heights row-major."""
    payload = _HEADER.pack(HEIGHTMAP_MAGIC, hm.resolution, hm.width, hm.depth)
    payload += np.ascontiguousarray(hm.heights, dtype="<f4").tobytes()
    try:
        Path(path).write_bytes(payload)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write heightmap {path}: {e}") from e


def read_heightmap(path: Path) -> Heightmap:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"Cannot read heightmap {path}: {e}") from e
    if len(data) < _HEADER.size:
        raise ArtifactIOError(f"{path}: truncated heightmap header")
    magic, n, width, depth = _HEADER.unpack_from(data)
    if magic != HEIGHTMAP_MAGIC:
        raise ArtifactIOError(f"{path}: not a heightmap (magic {magic!r})")
    expected = _HEADER.size + 4 * n * n
    if n < 2 or len(data) != expected:
        raise ArtifactIOError(f"{path}: expected {expected} bytes for resolution {n}, got {len(data)}")
    heights = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(n, n)
    return Heightmap(width=width, depth=depth, heights=heights.astype(np.float64))
