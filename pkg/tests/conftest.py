"""
Pytest fixtures for testing.
"""

import os
from pathlib import Path

import numpy as np
import pytest

# Keep runs independent of the developer's environment
os.environ["FORGE_THREADS"] = "4"
os.environ["FORGE_LOG_LEVEL"] = "WARNING"

from sylva_forge.models.params import TerrainParams  # noqa: E402
from sylva_forge.services.terrain import Heightmap, generate_heightmap  # noqa: E402
from sylva_forge.services.texture import Texture, pixel_extent  # noqa: E402

PRESETS_DIR = Path(__file__).resolve().parents[1] / "src" / "sylva_forge" / "presets"


@pytest.fixture
def flat_terrain() -> Heightmap:
    """20 m x 20 m terrain at height zero."""
    return Heightmap(width=20.0, depth=20.0, heights=np.zeros((5, 5)))


@pytest.fixture
def small_terrain() -> Heightmap:
    """32 m x 32 m noise terrain."""
    params = TerrainParams(width=32.0, depth=32.0, grid_resolution=17, amplitude=2.0, base_frequency=0.05)
    return generate_heightmap(params, seed=1, workers=1)


@pytest.fixture
def gradient_texture() -> Texture:
    """8 x 8 texture rising from 0 at the left to 1 at the right."""
    values = np.tile(np.linspace(0.0, 1.0, 8), (8, 1))
    return Texture(values, pixel_extent(8, 8))


@pytest.fixture(scope="session")
def presets_dir() -> Path:
    return PRESETS_DIR


@pytest.fixture
def scene_document(tmp_path: Path) -> Path:
    """Small scene document with one tree pipeline and grass."""
    document = tmp_path / "scene.json"
    document.write_text(
        """{
  "seed": 3,
  "terrain": {"width": 24.0, "depth": 24.0, "grid_resolution": 13, "amplitude": 1.0, "base_frequency": 0.05},
  "terrain_spacing": 1.0,
  "pipelines": [{"nodes": [
    {"id": "density", "kind": "source", "params": {"type": "constant", "value": 1.0}},
    {"id": "samples", "kind": "sampling", "params": {"r": 6.0}, "inputs": ["density"]},
    {"id": "trees", "kind": "placement", "params": {"prefab": "small_tree"}, "inputs": ["samples"]}
  ]}],
  "prefabs": {
    "small_tree": {"type": "tree", "trunk_height": 4.0, "trunk_radius": 0.2,
                   "canopy_radii": [1.5, 1.5, 2.0], "point_budget": 200}
  },
  "grass": {
    "density": {"type": "constant", "value": 0.5, "width": 8, "height": 8},
    "params": {"tile_size": 4, "max_per_tile": 4, "segments": 2}
  },
  "dataset": {"target_size": 256, "val_ratio": 0.5}
}
""",
        encoding="utf-8",
    )
    return document
