"""
Mass grass synthesis.

Anchors come from a density texture split into tiles: a tile of mean density
d receives floor(d * P + 0.5) anchors laid on a ceil(sqrt(p))-wide grid in
row-major order. Every anchor then gets a blade whose seven random draws are
counter-based on (tile index, in-tile index), so any chunking or worker
count produces the same blades.
"""

import logging
import math
import time
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from sylva_forge.core.exceptions import ForgeValidationError
from sylva_forge.core.geometry import Rect
from sylva_forge.core.parallel import chunk_bounds, parallel_map
from sylva_forge.core.rng import RngStream
from sylva_forge.models.cloud import GRASS_INSTANCE_ID, LabeledPointCloud
from sylva_forge.models.enums import Label
from sylva_forge.models.params import GrassParams
from sylva_forge.services.terrain import Heightmap, heights_at
from sylva_forge.services.texture import Texture

logger = logging.getLogger(__name__)

# height, width, scale, bend, rotation, jitter x, jitter y
DRAWS_PER_BLADE = 7

# Fixed chunk size: output must not depend on the worker count
CHUNK_ANCHORS = 65536


@dataclass(frozen=True)
class AnchorSet:
    """Anchors in texture pixel space with their tile bookkeeping."""

    positions: np.ndarray  # (N, 2) pixel-space x, y
    tile_index: np.ndarray  # row-major tile number
    local_index: np.ndarray  # index inside the tile
    width: int  # texture size in pixels
    height: int

    def __len__(self) -> int:
        return len(self.positions)

    def to_world(self, extent: Rect) -> np.ndarray:
        scale = np.array([extent.width / self.width, extent.depth / self.height])
        return np.array([extent.x0, extent.y0]) + self.positions * scale


def _ceil_sqrt(p: np.ndarray) -> np.ndarray:
    g = np.floor(np.sqrt(p)).astype(np.int64)
    g += g * g < p
    g -= (g - 1) * (g - 1) >= p
    return np.maximum(g, 0)


def sample_anchors(t: Texture, t_s: int, P: int) -> AnchorSet:
    """Tile-grid anchors; edge tiles average over their actual pixel count."""
    if t_s < 1 or P < 0:
        raise ForgeValidationError(f"Need tile size >= 1 and P >= 0, got t_s={t_s} P={P}")
    h, w = t.shape
    rows, cols = math.ceil(h / t_s), math.ceil(w / t_s)

    padded = np.zeros((rows * t_s, cols * t_s))
    padded[:h, :w] = t.values
    mask = np.zeros_like(padded)
    mask[:h, :w] = 1.0
    sums = padded.reshape(rows, t_s, cols, t_s).sum(axis=(1, 3))
    counts = mask.reshape(rows, t_s, cols, t_s).sum(axis=(1, 3))
    density = sums / counts
    budget = np.floor(density * P + 0.5).astype(np.int64).ravel()

    total = int(budget.sum())
    tile_index = np.repeat(np.arange(rows * cols, dtype=np.int64), budget)
    starts = np.cumsum(budget) - budget
    local_index = np.arange(total, dtype=np.int64) - np.repeat(starts, budget)

    g = _ceil_sqrt(budget)[tile_index]
    tile_row, tile_col = np.divmod(tile_index, cols)
    x0 = tile_col * t_s
    y0 = tile_row * t_s
    tw = np.minimum(x0 + t_s, w) - x0
    th = np.minimum(y0 + t_s, h) - y0
    cell_row, cell_col = np.divmod(local_index, np.maximum(g, 1))
    px = x0 + (cell_col + 0.5) / g * tw
    py = y0 + (cell_row + 0.5) / g * th

    logger.debug(f"Anchors sampled: tiles={rows * cols} anchors={total}")
    return AnchorSet(np.column_stack([px, py]), tile_index, local_index, w, h)


def _lerp(bounds: tuple[float, float], u: np.ndarray) -> np.ndarray:
    lo, hi = bounds
    return lo + (hi - lo) * u


def blade_vertices(params: GrassParams, u: np.ndarray) -> np.ndarray:
    """
    Local-frame blades, shape (N, 2S+1, 3), from per-blade uniforms `u` (N, 7).

    Vertex pairs sit at heights h*i/S for i = 0..S-1 with width w*(1 - i/S)
    across local y, the tip at h. Then scale, bend along local x weighted by
    the squared height fraction, and rotate about +z.
    """
    S = params.segments
    n = len(u)
    h = _lerp(params.blade_height, u[:, 0])
    w = _lerp(params.blade_width, u[:, 1])
    s = _lerp(params.scale_range, u[:, 2])
    bend = params.max_bend * u[:, 3]
    rot = 2.0 * math.pi * u[:, 4]

    frac = np.append(np.repeat(np.arange(S) / S, 2), 1.0)  # height fraction per vertex
    side = np.append(np.tile([-0.5, 0.5], S), 0.0)
    taper = np.append(np.repeat(1.0 - np.arange(S) / S, 2), 0.0)

    height = (s * h)[:, None]
    y = (s * w)[:, None] * taper[None, :] * side[None, :]
    z = height * frac[None, :]
    weight = frac * frac
    x = height * np.sin(bend)[:, None] * weight[None, :]
    z = z - height * (1.0 - np.cos(bend))[:, None] * weight[None, :]

    cos_r = np.cos(rot)[:, None]
    sin_r = np.sin(rot)[:, None]
    out = np.empty((n, 2 * S + 1, 3))
    out[..., 0] = x * cos_r - y * sin_r
    out[..., 1] = x * sin_r + y * cos_r
    out[..., 2] = z
    return out


def blade_geometry(params: GrassParams, stream: RngStream) -> np.ndarray:
    """One blade in its local frame, (2S+1, 3)."""
    u = stream.generator.random(DRAWS_PER_BLADE)
    return blade_vertices(params, u[None, :])[0]


@dataclass(frozen=True)
class Blade:
    anchor: np.ndarray
    vertices: np.ndarray
    label: Label = Label.GRASS


@dataclass(frozen=True)
class BladeBatch:
    """Columnar blades: anchors (N, 3) and world-space vertices (N, 2S+1, 3)."""

    anchors: np.ndarray
    vertices: np.ndarray

    def __len__(self) -> int:
        return len(self.anchors)

    def __getitem__(self, i: int) -> Blade:
        return Blade(self.anchors[i], self.vertices[i])

    def __iter__(self) -> Iterator[Blade]:
        return (self[i] for i in range(len(self)))

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0] * self.vertices.shape[1]

    @classmethod
    def empty(cls, segments: int) -> "BladeBatch":
        return cls(np.empty((0, 3)), np.empty((0, 2 * segments + 1, 3)))

    def to_cloud(self) -> LabeledPointCloud:
        return LabeledPointCloud.uniform(
            self.vertices.reshape(-1, 3), Label.GRASS, GRASS_INSTANCE_ID
        )


def instantiate_grass(
    anchors: AnchorSet,
    hm: Heightmap,
    params: GrassParams,
    stream: RngStream,
    workers: int | None = None,
) -> BladeBatch:
    """Jitter anchors, drop them onto the terrain and grow a blade on each."""
    n = len(anchors)
    if n == 0:
        return BladeBatch.empty(params.segments)
    started = time.perf_counter()
    world = anchors.to_world(hm.extent)

    def chunk(span: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = span
        u = stream.counter_uniform(
            anchors.tile_index[lo:hi], anchors.local_index[lo:hi], draws=DRAWS_PER_BLADE
        )
        xy = world[lo:hi] + params.jitter * (2.0 * u[:, 5:7] - 1.0)
        xy[:, 0] = np.clip(xy[:, 0], 0.0, hm.width)
        xy[:, 1] = np.clip(xy[:, 1], 0.0, hm.depth)
        base = np.column_stack([xy, heights_at(hm, xy[:, 0], xy[:, 1])])
        return base, base[:, None, :] + blade_vertices(params, u)

    spans = chunk_bounds(n, math.ceil(n / CHUNK_ANCHORS))
    parts = parallel_map(chunk, spans, workers)
    batch = BladeBatch(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
    )
    logger.info(
        f"Grass generated: blades={n} vertices={batch.vertex_count} "
        f"duration={time.perf_counter() - started:.3f}s"
    )
    return batch
