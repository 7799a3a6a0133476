"""Scene document and settings tests."""

import json

import pytest
from pydantic import ValidationError

from sylva_forge.core.config import get_settings
from sylva_forge.core.exceptions import ConfigError, ForgeValidationError
from sylva_forge.models.config import SceneConfig, load_scene_config, parse_scene_config
from sylva_forge.models.enums import DatasetMode
from sylva_forge.models.params import DiskParams, GrassParams, PlacementParams


def test_settings_defaults():
    settings = get_settings()
    assert settings.threads == 4
    assert settings.dataset_path_template == "{split}/{scene}_{cluster}.csv"
    assert settings.manifest_name == "manifest.json"


def test_empty_document_fills_defaults():
    config = parse_scene_config("{}")
    assert config.seed == 0
    assert config.pipelines == []
    assert config.grass is None
    assert config.dataset.mode == DatasetMode.LIDAR
    assert config.sensor.gamma == get_settings().default_gamma


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="trrain"):
        parse_scene_config('{"trrain": {}}')


def test_invalid_json_names_position():
    with pytest.raises(ConfigError, match="line 1"):
        parse_scene_config('{"seed": }', source="broken.json")


@pytest.mark.parametrize(
    "document",
    [
        {"seed": -1},
        {"seed": 2**64},
        {"terrain": {"grid_resolution": 1}},
        {"sensor": {"grid": [0.0, 5.0]}},
        {"dataset": {"val_ratio": 1.0}},
        {"dataset": {"category_map": {"grass": "shrubbery"}}},
        {"prefabs": {"x": {"type": "tree", "canopy_radii": [1.0, -1.0, 1.0]}}},
        {"prefabs": {"x": {"type": "rock"}}},
    ],
)
def test_invalid_documents(document):
    with pytest.raises(ConfigError):
        parse_scene_config(json.dumps(document))


def test_config_error_is_validation_error():
    with pytest.raises(ForgeValidationError):
        parse_scene_config("[]")


def test_disk_params_radius_rules():
    assert DiskParams(r=2.0).r == 2.0
    assert DiskParams(r_min=1.0, r_max=3.0).r_max == 3.0
    with pytest.raises(ValidationError):
        DiskParams()
    with pytest.raises(ValidationError):
        DiskParams(r_min=3.0, r_max=1.0)
    with pytest.raises(ValidationError):
        DiskParams(r=1.0, k=0)


def test_range_params():
    with pytest.raises(ValidationError):
        GrassParams(blade_height=(0.6, 0.2))
    with pytest.raises(ValidationError):
        PlacementParams(prefab="tree", scale_range=(2.0, 1.0))


def test_demo_scene_loads(presets_dir):
    config = load_scene_config(presets_dir / "demo_scene.json")
    assert config.seed == 42
    assert set(config.prefabs) == {"broadleaf", "conifer", "shrub"}
    assert config.pipelines == ["forest_pipeline.json", "understorey_pipeline.json"]
    assert config.grass is not None


def test_dump_round_trips_through_validation():
    config = SceneConfig(seed=9)
    assert SceneConfig.model_validate(config.model_dump(mode="json")) == config
