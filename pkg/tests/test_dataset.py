"""K-means partitioning and dataset build tests."""

import json

import numpy as np
import pandas as pd
import pytest

from sylva_forge.core.exceptions import DomainError, ForgeValidationError
from sylva_forge.core.rng import RngStream
from sylva_forge.models.cloud import LabeledPointCloud
from sylva_forge.models.config import DatasetConfig, SensorConfig
from sylva_forge.models.enums import Category, DatasetMode, Label, Split
from sylva_forge.services.dataset import (
    Subcloud,
    assign_splits,
    build_dataset,
    denormalize,
    kmeans_xy,
    make_subclouds,
    normalize_subcloud,
    process_scene,
)
from sylva_forge.services.scene import export_csv
from sylva_forge.services.storage import ArtifactStore

LABELS = [Label.TERRAIN, Label.TRUNK, Label.CANOPY, Label.GRASS, Label.BUSHES]


def synthetic_cloud(n: int, seed: int = 0, size: float = 40.0) -> LabeledPointCloud:
    rng = np.random.default_rng(seed)
    xyz = np.column_stack([rng.uniform(0, size, n), rng.uniform(0, size, n), rng.uniform(0, 10, n)])
    labels = rng.choice([int(label) for label in LABELS], size=n)
    return LabeledPointCloud(xyz, labels, np.zeros(n, dtype=np.int64))


@pytest.fixture
def scene_files(tmp_path):
    paths = []
    for i in range(2):
        path = tmp_path / "scenes" / f"plot_{i}.csv"
        path.parent.mkdir(exist_ok=True)
        export_csv(synthetic_cloud(1500, seed=i), path)
        paths.append(path)
    return paths


def test_kmeans_single_cluster_is_mean():
    cloud = synthetic_cloud(300)
    clustering = kmeans_xy(cloud, 1, 100, 1e-9, RngStream.root(0))
    assert np.allclose(clustering.centroids[0], cloud.xyz[:, :2].mean(axis=0))
    assert np.all(clustering.assignments == 0)


def test_kmeans_one_point_per_cluster():
    xy = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 5.0, 0.0], [7.0, 7.0, 0.0], [3.0, 2.0, 0.0]])
    clustering = kmeans_xy(xy, 5, 10, 1e-9, RngStream.root(1))
    assert clustering.inertia[-1] == 0.0
    assert sorted(clustering.assignments.tolist()) == [0, 1, 2, 3, 4]


def test_kmeans_separates_blobs():
    rng = np.random.default_rng(2)
    blob_a = rng.normal((0.0, 0.0), 1.0, size=(500, 2))
    blob_b = rng.normal((100.0, 100.0), 1.0, size=(500, 2))
    xyz = np.column_stack([np.vstack([blob_a, blob_b]), np.zeros(1000)])
    assignments, centroids = kmeans_xy(xyz, 2, 100, 1e-6, RngStream.root(3))
    assert len(set(assignments[:500].tolist())) == 1
    assert len(set(assignments[500:].tolist())) == 1
    assert assignments[0] != assignments[500]


def test_kmeans_inertia_never_increases():
    clustering = kmeans_xy(synthetic_cloud(2000), 8, 50, 0.0, RngStream.root(4))
    assert all(b <= a * (1 + 1e-9) for a, b in zip(clustering.inertia, clustering.inertia[1:]))


@pytest.mark.parametrize("k", [0, 11])
def test_kmeans_k_out_of_range(k):
    with pytest.raises(DomainError):
        kmeans_xy(synthetic_cloud(10), k, 10, 1e-4, RngStream.root(0))


def test_single_subcloud_when_n_equals_target():
    cloud = synthetic_cloud(256)
    [sc] = make_subclouds(cloud, 256, RngStream.root(0))
    assert len(sc) == 256
    assert sorted(sc.indices.tolist()) == list(range(256))


def test_subcloud_sizes_and_disjointness():
    cloud = synthetic_cloud(5000, seed=5)
    subclouds = make_subclouds(cloud, 400, RngStream.root(5))
    assert subclouds
    seen: set[int] = set()
    for sc in subclouds:
        assert 100 < len(sc) <= 400
        members = set(sc.indices.tolist())
        assert not members & seen
        seen |= members
        assert np.array_equal(sc.xyz, cloud.xyz[sc.indices])


def test_subcloud_categories_follow_map():
    cloud = synthetic_cloud(500, seed=6)
    [sc] = make_subclouds(cloud, 500, RngStream.root(6))
    grass = cloud.labels[sc.indices] == Label.GRASS
    assert np.all(sc.categories[grass] == Category.UNDERSTOREY)
    assert sum(sc.histogram().values()) == len(sc)


def test_normalize_centered_unit_cloud_unchanged():
    xyz = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, -0.5, 0.0]])
    sc = Subcloud(0, np.arange(4), xyz, np.zeros(4, dtype=np.int64))
    normalized = normalize_subcloud(sc)
    assert normalized.normalization.scale == 1.0
    assert np.allclose(normalized.xyz, xyz)


def test_normalize_round_trip():
    cloud = synthetic_cloud(300, seed=7)
    sc = Subcloud(0, np.arange(300), cloud.xyz, np.zeros(300, dtype=np.int64))
    normalized = normalize_subcloud(sc)
    assert np.linalg.norm(normalized.xyz, axis=1).max() == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(denormalize(normalized).xyz, sc.xyz, atol=1e-9)


def test_assign_splits():
    names = [f"scene_{i}" for i in range(10)]
    splits = assign_splits(names, 0.2, RngStream.root(8))
    assert sum(s is Split.VAL for s in splits.values()) == 2
    assert splits == assign_splits(names, 0.2, RngStream.root(8))
    assert all(s is Split.TRAIN for s in assign_splits(names, 0.0, RngStream.root(8)).values())


def test_camera_subclouds_come_from_occluded_cloud():
    cloud = synthetic_cloud(3000, seed=9)
    config = DatasetConfig(mode=DatasetMode.CAMERA, target_size=1000, noise_sigma=0.0)
    result = process_scene("plot", cloud, config, SensorConfig(), RngStream.root(9))
    assert 0 < len(result.cloud) < len(cloud)
    visible = {tuple(p) for p in result.cloud.xyz}
    for sc in result.subclouds:
        assert all(tuple(p) in visible for p in sc.xyz)


def test_lidar_mode_keeps_all_points():
    cloud = synthetic_cloud(1000, seed=10)
    config = DatasetConfig(mode=DatasetMode.LIDAR, target_size=1000, noise_sigma=0.01)
    result = process_scene("plot", cloud, config, SensorConfig(), RngStream.root(10))
    assert len(result.cloud) == 1000
    assert np.array_equal(result.cloud.labels, cloud.labels)
    assert not np.array_equal(result.cloud.xyz, cloud.xyz)


def test_build_dataset_manifest_accounting(tmp_path, scene_files):
    config = DatasetConfig(target_size=500, val_ratio=0.5)
    with ArtifactStore(tmp_path / "dataset") as store:
        manifest = build_dataset(scene_files, config, SensorConfig(), 1, store, workers=2)
    assert manifest.total_points == sum(manifest.histogram.values())
    assert manifest.total_points == sum(r.count for r in manifest.subclouds)
    assert sorted(r.split for r in manifest.scenes) == ["train", "val"]
    for record in manifest.subclouds:
        frame = pd.read_csv(tmp_path / "dataset" / record.file)
        assert list(frame.columns) == ["x", "y", "z", "category"]
        assert len(frame) == record.count
        assert frame["category"].value_counts().to_dict() == {k: v for k, v in record.histogram.items() if v}
    written = json.loads((tmp_path / "dataset" / "manifest.json").read_text())
    assert written["mode"] == "lidar"
    assert written["category_map"]["grass"] == "understorey"


def test_build_dataset_is_reproducible(tmp_path, scene_files):
    config = DatasetConfig(target_size=500, normalize=True)
    trees = []
    for name, workers in (("one", 1), ("two", 4)):
        with ArtifactStore(tmp_path / name) as store:
            build_dataset(scene_files, config, SensorConfig(), 2, store, workers=workers)
        root = tmp_path / name
        trees.append({p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()})
    assert trees[0] == trees[1]


def test_build_dataset_with_prefix(tmp_path, scene_files):
    with ArtifactStore(tmp_path / "out") as store:
        build_dataset(scene_files, DatasetConfig(target_size=500), SensorConfig(), 3, store, prefix="lidar/")
    assert (tmp_path / "out" / "lidar" / "manifest.json").exists()


def test_build_dataset_rejects_duplicate_names(tmp_path, scene_files):
    other = tmp_path / "copy" / scene_files[0].name
    other.parent.mkdir()
    other.write_bytes(scene_files[0].read_bytes())
    with ArtifactStore(tmp_path / "out") as store, pytest.raises(ForgeValidationError):
        build_dataset([scene_files[0], other], DatasetConfig(), SensorConfig(), 0, store)
