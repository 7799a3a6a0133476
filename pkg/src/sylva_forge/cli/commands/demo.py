"""`forge demo`: the shipped example scene end to end, scene through both datasets."""

import argparse
import logging
from pathlib import Path

from sylva_forge.cli.commands.scene import SCENE_FILE, scene_manifest_config, write_scene
from sylva_forge.cli.deps import add_out, add_seed, add_threads, resolve_seed, run_manifest
from sylva_forge.models.config import load_scene_config
from sylva_forge.models.enums import DatasetMode
from sylva_forge.services.dataset import build_dataset
from sylva_forge.services.scene import build_scene
from sylva_forge.services.storage import ArtifactStore

logger = logging.getLogger(__name__)

PRESETS_DIR = Path(__file__).resolve().parents[2] / "presets"
DEMO_SCENE = PRESETS_DIR / "demo_scene.json"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("demo", help="Build the example scene and its datasets")
    add_seed(parser)
    add_threads(parser)
    add_out(parser, "Output directory")
    parser.set_defaults(handler=run, command_path=("demo",))


def run(args: argparse.Namespace) -> int:
    config = load_scene_config(DEMO_SCENE)
    seed = resolve_seed(args, config)
    with ArtifactStore(args.out) as store:
        result = build_scene(config, seed, DEMO_SCENE.parent, args.threads)
        counts = write_scene(store, result, prefix="scene/")
        scenes = [store.root / "scene" / SCENE_FILE]
        for mode in DatasetMode:
            dataset_config = config.dataset.model_copy(update={"mode": mode})
            manifest = build_dataset(
                scenes, dataset_config, config.sensor, seed, store, args.threads, f"dataset/{mode.value}/"
            )
            counts[f"{mode.value}_subclouds"] = len(manifest.subclouds)
        store.write_manifest(run_manifest(args, seed, store, scene_manifest_config(config, seed), counts))
    logger.info(f"Demo done: out={args.out} points={counts['points']}")
    return 0
