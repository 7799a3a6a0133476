"""
Camera-like post-processing of scene clouds.

Occlusion uses hidden point removal: points are moved into the viewpoint's
frame, spherically flipped about a sphere of radius R = d_max * 10**gamma,
and the visible points are the vertices of the convex hull of the flipped
set plus the viewpoint itself.
"""

import logging
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from sylva_forge.core.exceptions import DomainError, ForgeValidationError
from sylva_forge.core.geometry import Aabb, Vec3
from sylva_forge.core.parallel import parallel_map
from sylva_forge.core.rng import RngStream
from sylva_forge.models.cloud import LabeledPointCloud
from sylva_forge.models.config import SensorConfig
from sylva_forge.models.params import NoiseParams, OcclusionParams

logger = logging.getLogger(__name__)

# Relative singular-value cutoff for the degenerate-hull fallback
_RANK_TOL = 1e-10


def _degenerate_hull(points: np.ndarray) -> np.ndarray:
    """Hull vertices of a point set spanning fewer than three dimensions."""
    centered = points - points.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[0] == 0.0:
        return np.array([0])
    rank = int((s > _RANK_TOL * s[0]).sum())
    if rank == 1:
        t = centered @ vt[0]
        return np.unique([int(np.argmin(t)), int(np.argmax(t))])
    planar = centered @ vt[:2].T
    try:
        return np.sort(ConvexHull(planar).vertices)
    except QhullError:
        t = centered @ vt[0]
        return np.unique([int(np.argmin(t)), int(np.argmax(t))])


def convex_hull_3d(points: np.ndarray) -> np.ndarray:
    """
    Sorted indices of the convex hull vertices.

    Fewer than four points are all returned. Coplanar and collinear inputs
    fall back to the hull in their own plane or line.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(points)
    if n < 4:
        return np.arange(n)
    try:
        return np.sort(ConvexHull(points).vertices)
    except QhullError:
        logger.debug(f"Degenerate hull input: points={n}, falling back to lower dimension")
        return _degenerate_hull(points)


def _xyz(cloud: LabeledPointCloud | np.ndarray) -> np.ndarray:
    if isinstance(cloud, LabeledPointCloud):
        return cloud.xyz
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def spherical_flip(points: np.ndarray, gamma: float) -> np.ndarray:
    """Flip viewpoint-relative points about the sphere of radius d_max * 10**gamma."""
    if not math.isfinite(gamma):
        raise ForgeValidationError(f"gamma must be finite, got {gamma}")
    norms = np.linalg.norm(points, axis=1)
    if (norms == 0.0).any():
        raise DomainError("Viewpoint coincides with a point of the cloud")
    radius = norms.max() * 10.0**gamma
    return points + 2.0 * ((radius - norms) / norms)[:, None] * points


def hpr_visible(cloud: LabeledPointCloud | np.ndarray, viewpoint: Vec3, gamma: float) -> np.ndarray:
    """
    Hidden point removal from one viewpoint.

    Args:
        cloud: Labeled cloud or an (N, 3) array.
        viewpoint: Sensor position in world coordinates.
        gamma: Flip radius exponent; R = max distance * 10**gamma.

    Returns:
        Sorted indices of the points visible from `viewpoint`.

    Raises:
        DomainError: The viewpoint coincides with a point.
    """
    xyz = _xyz(cloud)
    n = len(xyz)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    flipped = spherical_flip(xyz - np.asarray(viewpoint, dtype=np.float64), gamma)
    hull = convex_hull_3d(np.vstack([flipped, np.zeros((1, 3))]))
    return hull[hull < n]


def survey_viewpoints(extent: Aabb, altitude: float, spacing_x: float, spacing_y: float) -> list[Vec3]:
    """Serpentine lawnmower grid from the extent's min corner, `altitude` above its top."""
    if spacing_x <= 0 or spacing_y <= 0:
        raise ForgeValidationError(f"Survey spacings must be positive, got ({spacing_x}, {spacing_y})")
    (x0, y0, _), (x1, y1, z1) = extent.min, extent.max
    nx = math.floor((x1 - x0) / spacing_x + 1e-9) + 1
    ny = math.floor((y1 - y0) / spacing_y + 1e-9) + 1
    z = z1 + altitude
    viewpoints = []
    for row in range(ny):
        cols = range(nx) if row % 2 == 0 else range(nx - 1, -1, -1)
        y = y0 + row * spacing_y
        viewpoints.extend((x0 + col * spacing_x, y, z) for col in cols)
    return viewpoints


def default_viewpoints(cloud: LabeledPointCloud, sensor: SensorConfig) -> list[Vec3]:
    """One centered top-down viewpoint, or a survey grid when `sensor.grid` is set."""
    if len(cloud) == 0:
        return []
    box = Aabb.of_points(cloud.xyz)
    if sensor.grid is None:
        cx, cy = box.footprint.center
        return [(cx, cy, box.max[2] + sensor.altitude_offset)]
    return survey_viewpoints(box, sensor.altitude_offset, *sensor.grid)


def visible_indices(
    cloud: LabeledPointCloud, params: OcclusionParams, workers: int | None = None
) -> np.ndarray:
    """Union over all viewpoints of the visible index sets, ascending."""
    per_view = parallel_map(lambda vp: hpr_visible(cloud, vp, params.gamma), params.viewpoints, workers)
    if not per_view:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(per_view))


def occlude(
    cloud: LabeledPointCloud, params: OcclusionParams, workers: int | None = None
) -> LabeledPointCloud:
    """
    Subset of `cloud` seen from at least one viewpoint, original order kept.

    Args:
        cloud: Scene cloud.
        params: Gamma and viewpoints.
        workers: Threads over viewpoints.
    """
    keep = visible_indices(cloud, params, workers)
    occluded = cloud.subset(keep)
    before = cloud.label_counts()
    after = occluded.label_counts()
    kept = ", ".join(f"{k}={after[k]}/{before[k]}" for k in before if before[k])
    logger.info(
        f"Occlusion applied: viewpoints={len(params.viewpoints)} gamma={params.gamma} "
        f"visible={len(occluded)}/{len(cloud)} ({kept})"
    )
    return occluded


def add_noise(cloud: LabeledPointCloud, params: NoiseParams, stream: RngStream) -> LabeledPointCloud:
    """Zero-mean isotropic Gaussian jitter; labels and order unchanged."""
    if params.sigma == 0.0 or len(cloud) == 0:
        return cloud
    jitter = stream.generator.normal(0.0, params.sigma, size=cloud.xyz.shape)
    return cloud.with_xyz(cloud.xyz + jitter)
