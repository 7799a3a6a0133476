"""
Training datasets from labeled scene clouds.

A scene is optionally occluded (camera-like), jittered with measurement
noise, mapped to four categories and partitioned in xy with K-means into
subclouds of at most `target_size` points. Scenes, not subclouds, are
assigned to the train and validation splits.
"""

import logging
import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from sylva_forge.core.exceptions import ArtifactIOError, DomainError, ForgeValidationError
from sylva_forge.core.parallel import parallel_map
from sylva_forge.core.rng import RngStream
from sylva_forge.models.cloud import LabeledPointCloud
from sylva_forge.models.config import DatasetConfig, SensorConfig
from sylva_forge.models.enums import Category, DatasetMode, Label, Split
from sylva_forge.models.params import NoiseParams, OcclusionParams
from sylva_forge.models.reports import (
    DatasetManifest,
    NormalizationRecord,
    SceneRecord,
    SubcloudRecord,
)
from sylva_forge.schema.categories import DEFAULT_CATEGORY_MAP, build_category_map, map_labels, slug_map
from sylva_forge.services.scene import import_csv
from sylva_forge.services.sensor import add_noise, default_viewpoints, occlude
from sylva_forge.services.storage import ArtifactStore

logger = logging.getLogger(__name__)

SUBCLOUD_COLUMNS = ["x", "y", "z", "category"]
_CATEGORY_SLUGS = np.array([c.slug for c in Category])


# === K-means ===


@dataclass(frozen=True)
class Clustering:
    """Lloyd result: per-point cluster, centroids and inertia per assignment step."""

    assignments: np.ndarray
    centroids: np.ndarray
    inertia: list[float]
    iterations: int

    def __iter__(self):
        return iter((self.assignments, self.centroids))


def _kmeans_pp(xy: np.ndarray, k: int, generator: np.random.Generator) -> np.ndarray:
    n = len(xy)
    chosen = [int(generator.integers(n))]
    d2 = ((xy - xy[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0.0:
            cumulative = np.cumsum(d2)
            pick = int(np.searchsorted(cumulative, generator.random() * total, side="right"))
            pick = min(pick, n - 1)
        else:
            pick = int(np.argmax(d2))
        chosen.append(pick)
        d2 = np.minimum(d2, ((xy - xy[pick]) ** 2).sum(axis=1))
    return xy[chosen].copy()


def _assign(xy: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    distance, index = cKDTree(centroids).query(xy)
    return index.astype(np.int64), distance * distance


def kmeans_xy(
    cloud: LabeledPointCloud | np.ndarray,
    k: int,
    max_iter: int,
    tol: float,
    stream: RngStream,
) -> Clustering:
    """
    Lloyd's algorithm on (x, y) with k-means++ seeding.

    Stops once no centroid moves by `tol` or more, or after `max_iter`
    update steps. A cluster left empty is re-seeded at the point farthest
    from its own centroid.
    """
    xyz = cloud.xyz if isinstance(cloud, LabeledPointCloud) else np.asarray(cloud, dtype=np.float64)
    xy = xyz[:, :2]
    n = len(xy)
    if k < 1 or k > n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    if max_iter < 1:
        raise ForgeValidationError(f"max_iter must be >= 1, got {max_iter}")

    centroids = _kmeans_pp(xy, k, stream.generator)
    assignments, d2 = _assign(xy, centroids)
    inertia = [float(d2.sum())]

    iterations = 0
    for iterations in range(1, max_iter + 1):
        counts = np.bincount(assignments, minlength=k)
        updated = np.empty_like(centroids)
        for axis in range(2):
            sums = np.bincount(assignments, weights=xy[:, axis], minlength=k)
            updated[:, axis] = np.divide(sums, counts, out=centroids[:, axis].copy(), where=counts > 0)

        empty = np.flatnonzero(counts == 0)
        if len(empty):
            spare = d2.copy()
            for c in empty:
                far = int(np.argmax(spare))
                updated[c] = xy[far]
                spare[far] = -1.0
            logger.debug(f"K-means re-seeded empty clusters: count={len(empty)}")

        movement = float(np.linalg.norm(updated - centroids, axis=1).max())
        centroids = updated
        assignments, d2 = _assign(xy, centroids)
        inertia.append(float(d2.sum()))
        if movement < tol:
            break

    logger.debug(f"K-means done: k={k} points={n} iterations={iterations} inertia={inertia[-1]:.3f}")
    return Clustering(assignments, centroids, inertia, iterations)


# === Subclouds ===


@dataclass(frozen=True)
class Subcloud:
    """Category-labeled chunk of one scene cloud."""

    cluster_id: int
    indices: np.ndarray  # rows of the source cloud
    xyz: np.ndarray
    categories: np.ndarray
    normalization: NormalizationRecord | None = field(default=None)

    def __len__(self) -> int:
        return len(self.xyz)

    def histogram(self) -> dict[str, int]:
        counts = np.bincount(self.categories, minlength=len(Category))
        return {c.slug: int(counts[c]) for c in Category}


def make_subclouds(
    cloud: LabeledPointCloud,
    target_size: int,
    stream: RngStream,
    category_map: Mapping[Label, Category] | None = None,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> list[Subcloud]:
    """
    Partition into k = ceil(N / target_size) xy clusters.

    Larger clusters are subsampled without replacement to `target_size`;
    clusters of at most target_size / 4 points are discarded.
    """
    if target_size < 1:
        raise ForgeValidationError(f"target_size must be >= 1, got {target_size}")
    n = len(cloud)
    if n == 0:
        return []
    categories = map_labels(cloud.labels, category_map or DEFAULT_CATEGORY_MAP)
    k = math.ceil(n / target_size)
    clustering = kmeans_xy(cloud, k, max_iter, tol, stream.derive("kmeans"))

    order = np.argsort(clustering.assignments, kind="stable")
    bounds = np.searchsorted(clustering.assignments[order], np.arange(k + 1))
    subclouds = []
    for c in range(k):
        members = order[bounds[c]:bounds[c + 1]]
        if len(members) > target_size:
            generator = stream.derive(f"cluster-{c}").generator
            members = np.sort(generator.choice(members, size=target_size, replace=False))
        elif len(members) <= target_size / 4:
            continue
        subclouds.append(Subcloud(c, members, cloud.xyz[members], categories[members]))
    logger.debug(f"Subclouds made: points={n} clusters={k} kept={len(subclouds)}")
    return subclouds


def normalize_subcloud(sc: Subcloud) -> Subcloud:
    """Center on the centroid and scale into the unit sphere."""
    if len(sc) == 0:
        raise DomainError("Cannot normalize an empty subcloud")
    centroid = sc.xyz.mean(axis=0)
    centered = sc.xyz - centroid
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale == 0.0:
        scale = 1.0
    record = NormalizationRecord(centroid=tuple(float(v) for v in centroid), scale=scale)
    return replace(sc, xyz=centered / scale, normalization=record)


def denormalize(sc: Subcloud) -> Subcloud:
    if sc.normalization is None:
        return sc
    xyz = sc.xyz * sc.normalization.scale + np.asarray(sc.normalization.centroid)
    return replace(sc, xyz=xyz, normalization=None)


def write_subcloud(sc: Subcloud, path: Path) -> None:
    columns = (sc.xyz[:, 0], sc.xyz[:, 1], sc.xyz[:, 2], _CATEGORY_SLUGS[sc.categories])
    frame = pd.DataFrame(dict(zip(SUBCLOUD_COLUMNS, columns)))
    try:
        frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"Cannot write subcloud {path}: {e}") from e


# === Dataset build ===


def assign_splits(names: Sequence[str], val_ratio: float, stream: RngStream) -> dict[str, Split]:
    """Shuffle scenes by seed and send round(n * val_ratio) of them to validation."""
    order = stream.generator.permutation(len(names))
    n_val = math.floor(len(names) * val_ratio + 0.5)
    val = {names[i] for i in order[:n_val]}
    return {name: Split.VAL if name in val else Split.TRAIN for name in names}


@dataclass(frozen=True)
class ProcessedScene:
    name: str
    input_points: int
    cloud: LabeledPointCloud
    subclouds: list[Subcloud]
    clusters: int


def process_scene(
    name: str,
    cloud: LabeledPointCloud,
    config: DatasetConfig,
    sensor: SensorConfig,
    stream: RngStream,
    workers: int | None = None,
) -> ProcessedScene:
    """Occlusion (camera mode), noise and partitioning of one scene cloud."""
    processed = cloud
    if config.mode == DatasetMode.CAMERA and len(cloud):
        viewpoints = default_viewpoints(cloud, sensor)
        processed = occlude(cloud, OcclusionParams(gamma=sensor.gamma, viewpoints=viewpoints), workers)
    processed = add_noise(processed, NoiseParams(sigma=config.noise_sigma), stream.derive("noise"))

    mapping = build_category_map(config.category_map)
    subclouds = make_subclouds(
        processed,
        config.target_size,
        stream.derive("subclouds"),
        mapping,
        config.kmeans_max_iter,
        config.kmeans_tol,
    )
    if config.normalize:
        subclouds = [normalize_subcloud(sc) for sc in subclouds]
    clusters = math.ceil(len(processed) / config.target_size) if len(processed) else 0
    return ProcessedScene(name, len(cloud), processed, subclouds, clusters)


def build_dataset(
    scenes: Sequence[Path],
    config: DatasetConfig,
    sensor: SensorConfig,
    seed: int,
    store: ArtifactStore,
    workers: int | None = None,
    prefix: str = "",
) -> DatasetManifest:
    """
    Process every scene file and write subclouds plus the manifest.

    Args:
        scenes: Scene CSV files; their stems must be unique.
        config: Mode, sizes, split and noise.
        sensor: Viewpoints and gamma for the lidar mode.
        seed: Root seed of the dataset.
        store: Output store.
        workers: Threads over scenes.
        prefix: Subdirectory of `store` to write into.

    Returns:
        The manifest that was written.

    Raises:
        ForgeValidationError: No scenes, or repeated scene names.
    """
    started = time.perf_counter()
    scenes = [Path(p) for p in scenes]
    names = [p.stem for p in scenes]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ForgeValidationError(f"Scene file names must be unique, repeated: {duplicates}")
    if not scenes:
        raise ForgeValidationError("No scene files given")

    root = RngStream.root(seed).derive("dataset").derive(config.mode.value)
    splits = assign_splits(names, config.val_ratio, root.derive("split"))
    inner_workers = workers if len(scenes) == 1 else 1

    def run(job: tuple[str, Path]) -> ProcessedScene:
        name, path = job
        return process_scene(
            name, import_csv(path), config, sensor, root.derive("scene").derive(name), inner_workers
        )

    results = parallel_map(run, list(zip(names, scenes)), workers)

    template = store.settings.dataset_path_template
    scene_records: list[SceneRecord] = []
    subcloud_records: list[SubcloudRecord] = []
    totals = dict.fromkeys((c.slug for c in Category), 0)
    for result in results:
        split = splits[result.name]
        for sc in result.subclouds:
            relative = template.format(split=split.value, scene=result.name, cluster=sc.cluster_id)
            write_subcloud(sc, store.path(prefix + relative))
            histogram = sc.histogram()
            for key, count in histogram.items():
                totals[key] += count
            subcloud_records.append(
                SubcloudRecord(
                    file=relative,
                    split=split.value,
                    scene=result.name,
                    cluster=sc.cluster_id,
                    count=len(sc),
                    histogram=histogram,
                    normalization=sc.normalization,
                )
            )
        scene_records.append(
            SceneRecord(
                name=result.name,
                split=split.value,
                input_points=result.input_points,
                processed_points=len(result.cloud),
                clusters=result.clusters,
                kept=len(result.subclouds),
                discarded=result.clusters - len(result.subclouds),
            )
        )

    manifest = DatasetManifest(
        tool_version=store.settings.tool_version,
        seed=seed,
        mode=config.mode.value,
        config={
            "dataset": config.model_dump(mode="json"),
            "sensor": sensor.model_dump(mode="json"),
        },
        category_map=slug_map(build_category_map(config.category_map)),
        scenes=scene_records,
        subclouds=subcloud_records,
        total_points=sum(totals.values()),
        histogram=totals,
    )
    store.write_manifest(manifest, prefix + store.settings.manifest_name)
    logger.info(
        f"Dataset built: mode={config.mode.value} scenes={len(scenes)} "
        f"subclouds={len(subcloud_records)} points={manifest.total_points} "
        f"duration={time.perf_counter() - started:.3f}s"
    )
    return manifest
