"""
Scene assembly: prefabs, instancing and export of the labeled cloud.

Output order is terrain, then prefab instances ordered by (placement node id,
instance index), then grass. Instance ids follow the same order starting at
FIRST_INSTANCE_ID; terrain and grass use their reserved ids.
"""

import json
import logging
import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from sylva_forge.core.exceptions import ArtifactIOError, ForgeValidationError, MalformedRecordError
from sylva_forge.core.geometry import spin_rotation, twist_rotation
from sylva_forge.core.parallel import parallel_map
from sylva_forge.core.rng import RngStream
from sylva_forge.models.cloud import FIRST_INSTANCE_ID, LabeledPointCloud
from sylva_forge.models.config import (
    BushPrefabSpec,
    FilePrefabSpec,
    PrefabSpec,
    SceneConfig,
    TreePrefabSpec,
    resolve_relative,
)
from sylva_forge.models.enums import Label
from sylva_forge.schema.prefabs import BUILTIN_PREFABS
from sylva_forge.services.grass import Blade, BladeBatch, instantiate_grass, sample_anchors
from sylva_forge.services.pipeline import (
    InstanceParams,
    PlacementSet,
    evaluate,
    load_pipeline,
    parse_pipeline,
    source_texture,
)
from sylva_forge.services.terrain import Heightmap, generate_heightmap, terrain_points
from sylva_forge.services.texture import Texture

logger = logging.getLogger(__name__)

CLOUD_COLUMNS = ["x", "y", "z", "label", "instance_id"]
PREFAB_COLUMNS = ["x", "y", "z", "label"]
_LABEL_CODES = {label.slug: int(label) for label in Label}
_LABEL_SLUGS = np.array([label.slug for label in Label])


@dataclass(frozen=True)
class Prefab:
    """Labeled local-frame point set; +z up, ground contact at local z = 0."""

    name: str
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(points) == 0:
            raise ForgeValidationError(f"Prefab '{self.name}' has no points")
        if len(points) != len(labels):
            raise ForgeValidationError(f"Prefab '{self.name}': {len(points)} points, {len(labels)} labels")
        if labels.min() < 0 or labels.max() > max(Label):
            raise ForgeValidationError(f"Prefab '{self.name}' has labels outside the label set")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.points)


# === CSV reading ===


def read_checked_csv(path: Path, columns: list[str]) -> pd.DataFrame:
    """Read a headed CSV as strings, insisting on exactly `columns`."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise MalformedRecordError(path, 1, f"missing header, expected {','.join(columns)}") from None
    except pd.errors.ParserError as e:
        raise MalformedRecordError(path, 0, f"unparseable CSV: {e}") from e
    except OSError as e:
        raise ArtifactIOError(f"Cannot read {path}: {e}") from e
    if list(frame.columns) != columns:
        raise MalformedRecordError(
            path, 1, f"header {','.join(frame.columns)} does not match {','.join(columns)}"
        )
    return frame


def parse_float_columns(frame: pd.DataFrame, columns: list[str], path: Path) -> np.ndarray:
    """Float matrix of `columns`; the first bad cell is reported with its line number."""
    values = np.empty((len(frame), len(columns)))
    for j, column in enumerate(columns):
        parsed = pd.to_numeric(frame[column].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(parsed)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise MalformedRecordError(
                path, row + 2, f"column '{column}': '{frame[column].iloc[row]}' is not a finite number"
            )
        values[:, j] = parsed
    return values


def parse_labels(series: pd.Series, path: Path) -> np.ndarray:
    codes = series.str.strip().str.lower().map(_LABEL_CODES)
    bad = codes.isna().to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise MalformedRecordError(path, row + 2, f"unknown label '{series.iloc[row]}'")
    return codes.to_numpy(dtype=np.int64)


# === Prefabs ===


def load_prefab(path: Path, name: str | None = None) -> Prefab:
    """Prefab from an `x,y,z,label` CSV."""
    path = Path(path)
    frame = read_checked_csv(path, PREFAB_COLUMNS)
    xyz = parse_float_columns(frame, ["x", "y", "z"], path)
    labels = parse_labels(frame["label"], path)
    prefab = Prefab(name or path.stem, xyz, labels)
    logger.debug(f"Prefab loaded: name={prefab.name} points={len(prefab)}")
    return prefab


def _unit_vectors(generator: np.random.Generator, n: int) -> np.ndarray:
    v = generator.standard_normal((n, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / np.where(norms == 0.0, 1.0, norms)


def _ellipsoid_volume(
    generator: np.random.Generator, n: int, center: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    radial = generator.random(n) ** (1.0 / 3.0)
    return center + _unit_vectors(generator, n) * radial[:, None] * radii


def procedural_tree(
    trunk_height: float,
    trunk_radius: float,
    canopy_radii: tuple[float, float, float],
    point_budget: int,
    stream: RngStream,
    name: str = "tree",
) -> Prefab:
    """Cylinder-surface trunk (20% of the budget) under a solid ellipsoid canopy."""
    if min(trunk_height, trunk_radius, *canopy_radii) <= 0 or point_budget < 2:
        raise ForgeValidationError("procedural_tree needs positive dimensions and a budget >= 2")
    n_trunk = max(1, math.floor(0.2 * point_budget))
    n_canopy = point_budget - n_trunk
    gen = stream.generator

    theta = gen.random(n_trunk) * (2.0 * math.pi)
    z = gen.random(n_trunk) * trunk_height
    trunk = np.column_stack([trunk_radius * np.cos(theta), trunk_radius * np.sin(theta), z])
    canopy = _ellipsoid_volume(
        gen, n_canopy, np.array([0.0, 0.0, trunk_height]), np.asarray(canopy_radii)
    )
    labels = np.concatenate([
        np.full(n_trunk, int(Label.TRUNK)),
        np.full(n_canopy, int(Label.CANOPY)),
    ])
    return Prefab(name, np.vstack([trunk, canopy]), labels)


def procedural_bush(
    radii: tuple[float, float, float],
    point_budget: int,
    stream: RngStream,
    name: str = "bush",
) -> Prefab:
    """Solid ellipsoid resting on the ground plane."""
    center = np.array([0.0, 0.0, radii[2]])
    points = _ellipsoid_volume(stream.generator, point_budget, center, np.asarray(radii))
    return Prefab(name, points, np.full(point_budget, int(Label.BUSHES)))


def prefab_from_spec(name: str, spec: PrefabSpec, stream: RngStream, base_dir: Path) -> Prefab:
    match spec:
        case FilePrefabSpec():
            return load_prefab(resolve_relative(spec.path, base_dir), name)
        case TreePrefabSpec():
            return procedural_tree(
                spec.trunk_height, spec.trunk_radius, spec.canopy_radii, spec.point_budget, stream, name
            )
        case BushPrefabSpec():
            return procedural_bush(spec.radii, spec.point_budget, stream, name)
    raise ForgeValidationError(f"Unsupported prefab spec for '{name}'")


def build_registry(
    specs: Mapping[str, PrefabSpec],
    seed: int,
    base_dir: Path = Path("."),
) -> dict[str, Prefab]:
    """Built-in prefabs overlaid with document prefabs, each from its own stream."""
    merged = {**BUILTIN_PREFABS, **specs}
    prefab_stream = RngStream.root(seed).derive("prefabs")
    registry = {
        name: prefab_from_spec(name, merged[name], prefab_stream.derive(name), base_dir)
        for name in sorted(merged)
    }
    logger.info(f"Prefab registry built: {', '.join(f'{n}={len(p)}' for n, p in registry.items())}")
    return registry


# === Instancing and assembly ===


def apply_instance(prefab: Prefab, inst: InstanceParams) -> tuple[np.ndarray, np.ndarray]:
    """Scale, twist about the contact point, spin about +z, then translate."""
    rotation = spin_rotation(inst.spin) * twist_rotation(inst.twist_axis, inst.twist_angle)
    xyz = rotation.apply(prefab.points * inst.scale) + np.asarray(inst.position)
    return xyz, prefab.labels.copy()


def assemble_scene(
    hm: Heightmap,
    placements: Sequence[PlacementSet],
    blades: BladeBatch | Sequence[Blade],
    terrain_spacing: float,
    seed: int,
    registry: Mapping[str, Prefab],
    workers: int | None = None,
) -> LabeledPointCloud:
    """
    Terrain samples, instanced prefabs and grass vertices in one cloud.

    Instances are numbered from 2 in node-id then placement order.

    Raises:
        ForgeValidationError: A placement names a prefab missing from `registry`.
    """
    parts = [terrain_points(hm, terrain_spacing, seed)]

    ordered = [
        (s.prefab, inst)
        for s in sorted(placements, key=lambda s: s.node_id)
        for inst in s.instances
    ]
    missing = sorted({prefab for prefab, _ in ordered if prefab not in registry})
    if missing:
        raise ForgeValidationError(f"Placements reference unknown prefabs: {missing}")

    def instance(job: tuple[int, tuple[str, InstanceParams]]) -> LabeledPointCloud:
        offset, (prefab_name, inst) = job
        xyz, labels = apply_instance(registry[prefab_name], inst)
        return LabeledPointCloud(xyz, labels, np.full(len(labels), FIRST_INSTANCE_ID + offset))

    parts.extend(parallel_map(instance, list(enumerate(ordered)), workers))

    if isinstance(blades, BladeBatch):
        parts.append(blades.to_cloud())
    elif len(blades):
        parts.append(BladeBatch(
            np.stack([b.anchor for b in blades]), np.stack([b.vertices for b in blades])
        ).to_cloud())

    cloud = LabeledPointCloud.concat(parts)
    logger.info(
        f"Scene assembled: points={len(cloud)} instances={len(ordered)} "
        f"terrain={len(parts[0])}"
    )
    return cloud


def pipeline_namespace(reference: str | Path) -> str:
    """Stream namespace of a pipeline document referenced by path."""
    return f"pipeline-{Path(reference).stem}"


@dataclass(frozen=True)
class SceneBuild:
    """Everything a scene build produced, for export."""

    heightmap: Heightmap
    placements: list[PlacementSet]
    blades: BladeBatch | None
    grass_density: Texture | None
    cloud: LabeledPointCloud


def build_scene(
    config: SceneConfig,
    seed: int,
    base_dir: Path = Path("."),
    workers: int | None = None,
) -> SceneBuild:
    """Run terrain, every pipeline, grass and assembly for one scene document."""
    started = time.perf_counter()
    root = RngStream.root(seed)
    hm = generate_heightmap(config.terrain, root.derive(config.terrain.seed_label).key, workers)
    registry = build_registry(config.prefabs, seed, base_dir)

    placements: list[PlacementSet] = []
    for i, ref in enumerate(config.pipelines):
        if isinstance(ref, str):
            graph = load_pipeline(resolve_relative(ref, base_dir))
            namespace = pipeline_namespace(ref)
        else:
            graph = parse_pipeline(json.dumps(ref), base_dir)
            namespace = f"pipeline-{i}"
        placements.extend(evaluate(graph, hm, seed, registry, workers, namespace))

    blades = None
    density = None
    if config.grass is not None:
        density = source_texture(config.grass.density, root.derive("grass-density"), hm.extent, base_dir)
        params = config.grass.params
        anchors = sample_anchors(density, params.tile_size, params.max_per_tile)
        blades = instantiate_grass(anchors, hm, params, root.derive("grass"), workers)

    cloud = assemble_scene(
        hm, placements, blades if blades is not None else [], config.terrain_spacing, seed, registry, workers
    )
    logger.info(f"Scene built: points={len(cloud)} duration={time.perf_counter() - started:.3f}s")
    return SceneBuild(hm, placements, blades, density, cloud)


# === Export ===


def cloud_frame(cloud: LabeledPointCloud) -> pd.DataFrame:
    return pd.DataFrame({
        "x": cloud.xyz[:, 0],
        "y": cloud.xyz[:, 1],
        "z": cloud.xyz[:, 2],
        "label": _LABEL_SLUGS[cloud.labels],
        "instance_id": cloud.instance_ids,
    })


def export_csv(cloud: LabeledPointCloud, path: Path) -> None:
    """`x,y,z,label,instance_id`, six fractional digits, LF endings."""
    try:
        cloud_frame(cloud).to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"Cannot write cloud {path}: {e}") from e
    logger.debug(f"Cloud exported: path={Path(path).name} points={len(cloud)}")


def import_csv(path: Path) -> LabeledPointCloud:
    path = Path(path)
    frame = read_checked_csv(path, CLOUD_COLUMNS)
    xyz = parse_float_columns(frame, ["x", "y", "z"], path)
    labels = parse_labels(frame["label"], path)
    ids = pd.to_numeric(frame["instance_id"].str.strip(), errors="coerce").to_numpy(
        dtype=np.float64, na_value=np.nan
    )
    bad = ~np.isfinite(ids) | (ids % 1 != 0)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise MalformedRecordError(
            path, row + 2, f"instance_id '{frame['instance_id'].iloc[row]}' is not an integer"
        )
    return LabeledPointCloud(xyz, labels, ids.astype(np.int64))


def export_ply(cloud: LabeledPointCloud, path: Path) -> None:
    """Binary little-endian PLY with per-vertex uchar label and int instance id."""
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(cloud)}\n"
        "property double x\n"
        "property double y\n"
        "property double z\n"
        "property uchar label\n"
        "property int instance_id\n"
        "end_header\n"
    ).encode("ascii")
    records = np.empty(
        len(cloud),
        dtype=[("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("label", "u1"), ("instance_id", "<i4")],
    )
    records["x"], records["y"], records["z"] = cloud.xyz.T
    records["label"] = cloud.labels
    records["instance_id"] = cloud.instance_ids
    try:
        Path(path).write_bytes(header + records.tobytes())
    except OSError as e:
        raise ArtifactIOError(f"Cannot write PLY {path}: {e}") from e


def export_parquet(cloud: LabeledPointCloud, path: Path) -> None:
    table = pa.table({
        "x": cloud.xyz[:, 0],
        "y": cloud.xyz[:, 1],
        "z": cloud.xyz[:, 2],
        "label": pa.array(_LABEL_SLUGS[cloud.labels].tolist(), type=pa.string()),
        "instance_id": cloud.instance_ids,
    })
    try:
        pq.write_table(table, path)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write parquet {path}: {e}") from e
