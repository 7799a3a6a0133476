"""
Poisson-disk sampling.

Both the fixed-radius sampler and the texture-modulated variant run the same
kernel: an active list, k annulus candidates per visit and a background grid
for neighbor lookups. The k candidates of a visit are tested together and
the first valid one (in draw order) is accepted.

In modulated mode a candidate q is accepted iff every existing sample lies
at least radius_at(q) away. Since radius_at >= r_min and cells are
r_min/sqrt(2) wide, no two samples can share a cell, so each grid cell's
index list never holds more than one entry and is stored as a dense int
array (-1 = empty).
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from sylva_forge.core.exceptions import ArtifactIOError, ForgeValidationError
from sylva_forge.core.geometry import Rect
from sylva_forge.core.rng import RngStream
from sylva_forge.models.params import DiskParams
from sylva_forge.services.texture import Texture, sample_texture

logger = logging.getLogger(__name__)

RadiusFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SampleSet:
    """Sample positions, their spawning parent (-1 for roots) and local radius."""

    points: np.ndarray
    parents: np.ndarray
    radii: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls) -> "SampleSet":
        return cls(np.empty((0, 2)), np.empty(0, dtype=np.int64), np.empty(0))

    def subset(self, keep: np.ndarray) -> "SampleSet":
        """Samples where `keep` is true; parents that were dropped become -1."""
        keep = np.asarray(keep, dtype=bool)
        new_index = np.full(len(self) + 1, -1, dtype=np.int64)
        new_index[:-1][keep] = np.arange(int(keep.sum()))
        # parent -1 reads the trailing -1 slot
        parents = new_index[self.parents[keep]]
        return SampleSet(self.points[keep], parents, self.radii[keep])


def _resolve_region(p: DiskParams, default: Rect | None) -> Rect:
    if p.region is None and default is None:
        raise ForgeValidationError("Sampling needs a region")
    return p.region_rect(default)


def _poisson_disk(
    region: Rect,
    radius_at: RadiusFn,
    r_lo: float,
    r_hi: float,
    k: int,
    max_count: int | None,
    generator: np.random.Generator,
) -> SampleSet:
    if max_count == 0:
        return SampleSet.empty()
    if region.width == 0.0 or region.depth == 0.0:
        center = np.array([region.center])
        return SampleSet(center, np.array([-1]), radius_at(center))

    cell = r_lo / math.sqrt(2.0)
    # one spare column/row so points on the far edge keep their own cell
    nx = math.floor(region.width / cell) + 1
    ny = math.floor(region.depth / cell) + 1
    grid = np.full((ny, nx), -1, dtype=np.int64)
    reach = math.ceil(r_hi / cell)
    span = np.arange(-reach, reach + 1)
    offsets = np.stack(np.meshgrid(span, span), axis=-1).reshape(-1, 2)  # (dx, dy)

    origin = np.array([region.x0, region.y0])
    limit = math.inf if max_count is None else max_count
    points = np.empty((64, 2))
    parents = np.empty(64, dtype=np.int64)
    radii = np.empty(64)
    n_samples = 0

    def cell_of(xy: np.ndarray) -> np.ndarray:
        c = np.floor((xy - origin) / cell).astype(np.int64)
        c[..., 0] = np.clip(c[..., 0], 0, nx - 1)
        c[..., 1] = np.clip(c[..., 1], 0, ny - 1)
        return c

    def accept(xy: np.ndarray, parent: int, radius: float) -> int:
        nonlocal n_samples, points, parents, radii
        if n_samples == len(points):
            points = np.concatenate([points, np.empty_like(points)])
            parents = np.concatenate([parents, np.empty_like(parents)])
            radii = np.concatenate([radii, np.empty_like(radii)])
        index = n_samples
        points[index] = xy
        parents[index] = parent
        radii[index] = radius
        cx, cy = cell_of(xy)
        grid[cy, cx] = index
        n_samples += 1
        return index

    first = origin + generator.random(2) * np.array([region.width, region.depth])
    active = [accept(first, -1, float(radius_at(first[None, :])[0]))]

    while active and n_samples < limit:
        slot = int(generator.integers(len(active)))
        a = active[slot]
        ra = radii[a]
        theta = generator.random(k) * (2.0 * math.pi)
        dist = ra * (1.0 + generator.random(k))
        cand = points[a] + dist[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])

        inside = region.contains(cand)
        rq = radius_at(cand)
        cells = cell_of(cand)[:, None, :] + offsets[None, :, :]
        in_grid = (
            (cells[..., 0] >= 0) & (cells[..., 0] < nx) & (cells[..., 1] >= 0) & (cells[..., 1] < ny)
        )
        neighbors = np.where(
            in_grid,
            grid[np.clip(cells[..., 1], 0, ny - 1), np.clip(cells[..., 0], 0, nx - 1)],
            -1,
        )
        delta = cand[:, None, :] - points[np.maximum(neighbors, 0)]
        d2 = np.einsum("ijk,ijk->ij", delta, delta)
        conflict = (neighbors >= 0) & (d2 < (rq * rq)[:, None])
        ok = inside & ~conflict.any(axis=1)

        if ok.any():
            j = int(np.argmax(ok))
            active.append(accept(cand[j], a, float(rq[j])))
        else:
            active[slot] = active[-1]
            active.pop()

    n = n_samples
    return SampleSet(points[:n].copy(), parents[:n].copy(), radii[:n].copy())


def bridson(p: DiskParams, stream: RngStream, region: Rect | None = None) -> SampleSet:
    """
    Fixed-radius Poisson-disk samples; all pairwise distances >= p.r.

    Args:
        p: Disk parameters with `r` set.
        stream: Random stream of this sampling.
        region: Fallback rectangle when `p.region` is unset.

    Returns:
        Samples in generation order, parents before children.

    Raises:
        ForgeValidationError: `p` is in modulated mode, or no region is known.
    """
    if p.modulated:
        raise ForgeValidationError("bridson needs fixed-radius params (r)")
    r = p.r
    area = _resolve_region(p, region)
    samples = _poisson_disk(
        area,
        lambda xy: np.full(len(xy), r),
        r,
        r,
        p.k,
        p.max_count,
        stream.generator,
    )
    logger.debug(f"Poisson-disk samples: mode=fixed r={r} count={len(samples)}")
    return samples


def radius_field(p: DiskParams, modulation: Texture) -> RadiusFn:
    """radius_at(q) = r_min + texture(q) * (r_max - r_min)."""
    r_min, r_max = p.r_min, p.r_max

    def radius_at(xy: np.ndarray) -> np.ndarray:
        return r_min + sample_texture(modulation, xy[:, 0], xy[:, 1]) * (r_max - r_min)

    return radius_at


def modulated_bridson(
    p: DiskParams,
    modulation: Texture,
    stream: RngStream,
    region: Rect | None = None,
) -> SampleSet:
    """Variable-radius samples; pairwise distance >= min(radius_at(p), radius_at(q))."""
    if not p.modulated:
        raise ForgeValidationError("modulated_bridson needs r_min and r_max")
    area = _resolve_region(p, region if region is not None else modulation.extent)
    samples = _poisson_disk(
        area,
        radius_field(p, modulation),
        p.r_min,
        p.r_max,
        p.k,
        p.max_count,
        stream.generator,
    )
    logger.debug(
        f"Poisson-disk samples: mode=modulated r=[{p.r_min}, {p.r_max}] count={len(samples)}"
    )
    return samples


def spawn_filter(samples: SampleSet, probability: Texture, stream: RngStream) -> SampleSet:
    """Keep each sample independently with probability texture(point)."""
    if len(samples) == 0:
        return samples
    u = stream.generator.random(len(samples))
    p = sample_texture(probability, samples.points[:, 0], samples.points[:, 1])
    return samples.subset(u < p)


def write_samples_csv(samples: SampleSet, path: Path) -> None:
    frame = pd.DataFrame(
        {
            "x": samples.points[:, 0],
            "y": samples.points[:, 1],
            "parent_index": samples.parents,
        }
    )
    try:
        frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"Cannot write samples {path}: {e}") from e
