"""Heightmap generation and lookup tests."""

import numpy as np
import pytest

from sylva_forge.core.exceptions import ArtifactIOError, DomainError
from sylva_forge.core.rng import derive_seed
from sylva_forge.models.enums import Label
from sylva_forge.models.params import FractalParams, TerrainParams
from sylva_forge.services.terrain import (
    Heightmap,
    fbm,
    generate_heightmap,
    height_at,
    heights_at,
    perlin2,
    read_heightmap,
    terrain_points,
    write_heightmap,
)


def test_perlin_vanishes_on_lattice():
    assert perlin2(3.0, 7.0, 99) == 0.0


def test_perlin_bounded():
    rng = np.random.default_rng(0)
    xy = rng.uniform(-100, 100, size=(100_000, 2))
    values = perlin2(xy[:, 0], xy[:, 1], 5)
    assert np.abs(values).max() <= 1.0


def test_perlin_depends_on_seed():
    x = np.linspace(0.1, 9.9, 50)
    assert not np.allclose(perlin2(x, x * 0.7, 1), perlin2(x, x * 0.7, 2))


def test_fbm_single_octave_is_scaled_perlin():
    p = FractalParams(octaves=1, persistence=0.5, base_frequency=0.1, amplitude=3.0)
    expected = 3.0 * perlin2(12.3 * 0.1, 4.5 * 0.1, derive_seed(8, "octave-0"))
    assert fbm(12.3, 4.5, p, 8) == pytest.approx(expected, abs=1e-12)


def test_fbm_geometric_bound():
    """|fbm| stays within amplitude times the sum of octave weights."""
    p = FractalParams(octaves=4, persistence=0.5, amplitude=1.0, base_frequency=0.3)
    rng = np.random.default_rng(1)
    xy = rng.uniform(0, 200, size=(20_000, 2))
    assert np.abs(fbm(xy[:, 0], xy[:, 1], p, 4)).max() <= 1.875
    assert p.amplitude_bound() == pytest.approx(1.875)


def test_fbm_zero_amplitude():
    p = FractalParams(amplitude=0.0)
    assert np.all(fbm(np.arange(10.0), np.arange(10.0), p, 3) == 0.0)


def test_fbm_continuity():
    p = FractalParams(amplitude=5.0, base_frequency=0.05)
    a = fbm(10.0, 20.0, p, 2)
    b = fbm(10.0 + 1e-6, 20.0, p, 2)
    assert abs(a - b) <= 1e-3 * 5.0


def test_generate_heightmap_matches_fbm():
    """Every vertex equals fbm at its world position."""
    p = TerrainParams(width=30.0, depth=20.0, grid_resolution=9, amplitude=4.0, base_frequency=0.1)
    hm = generate_heightmap(p, seed=12, workers=1)
    xs, ys = hm.vertex_axes()
    assert hm.heights.shape == (9, 9)
    for i in (0, 4, 8):
        for j in (0, 3, 8):
            assert hm.heights[i, j] == pytest.approx(fbm(xs[j], ys[i], p, 12), abs=1e-12)


def test_generate_heightmap_zero_amplitude():
    p = TerrainParams(width=5.0, depth=5.0, grid_resolution=2, amplitude=0.0)
    assert np.all(generate_heightmap(p, 0).heights == 0.0)


def test_generate_heightmap_worker_independent():
    p = TerrainParams(width=64.0, depth=64.0, grid_resolution=65)
    one = generate_heightmap(p, 77, workers=1)
    many = generate_heightmap(p, 77, workers=8)
    assert np.array_equal(one.heights, many.heights)


def test_height_at_vertex_and_midpoint():
    hm = Heightmap(width=1.0, depth=1.0, heights=np.array([[0.0, 2.0], [0.0, 2.0]]))
    assert height_at(hm, 1.0, 0.0) == 2.0
    assert height_at(hm, 0.5, 0.5) == pytest.approx(1.0)


def test_heights_at_vertices(small_terrain):
    xs, ys = small_terrain.vertex_axes()
    gx, gy = np.meshgrid(xs, ys)
    values = heights_at(small_terrain, gx.ravel(), gy.ravel())
    assert np.allclose(values, small_terrain.heights.ravel(), atol=1e-9)


@pytest.mark.parametrize("x, y", [(-0.1, 5.0), (5.0, 20.01), (float("nan"), 1.0)])
def test_height_at_outside_extent(flat_terrain, x, y):
    with pytest.raises(DomainError):
        height_at(flat_terrain, x, y)


def test_terrain_points_grid_count():
    hm = Heightmap(width=10.0, depth=10.0, heights=np.zeros((3, 3)))
    cloud = terrain_points(hm, 1.0, seed=0)
    assert len(cloud) == 121
    assert np.all(cloud.labels == Label.TERRAIN)


def test_terrain_points_on_surface(small_terrain):
    cloud = terrain_points(small_terrain, 2.0, seed=5)
    expected = heights_at(small_terrain, cloud.xyz[:, 0], cloud.xyz[:, 1])
    assert np.allclose(cloud.xyz[:, 2], expected, atol=1e-12)


def test_terrain_points_spacing_larger_than_extent(flat_terrain):
    cloud = terrain_points(flat_terrain, 100.0, seed=0)
    assert len(cloud) == 4


def test_terrain_points_rejects_bad_spacing(flat_terrain):
    with pytest.raises(DomainError):
        terrain_points(flat_terrain, 0.0, seed=0)


def test_heightmap_file_round_trip(tmp_path, small_terrain):
    path = tmp_path / "terrain.bin"
    write_heightmap(small_terrain, path)
    loaded = read_heightmap(path)
    assert loaded.resolution == small_terrain.resolution
    assert loaded.width == small_terrain.width
    assert np.allclose(loaded.heights, small_terrain.heights, atol=1e-5)


def test_read_heightmap_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTAHMAP" + bytes(32))
    with pytest.raises(ArtifactIOError):
        read_heightmap(path)
