"""`forge dataset build`: LiDAR-like and camera-like subcloud datasets from scene clouds."""

import argparse
import glob
import logging
from pathlib import Path

from sylva_forge.cli.deps import (
    add_config,
    add_out,
    add_seed,
    add_threads,
    load_config,
    positive_int,
    resolve_seed,
)
from sylva_forge.core.exceptions import ConfigError
from sylva_forge.models.config import DatasetConfig
from sylva_forge.models.enums import DatasetMode
from sylva_forge.services.dataset import build_dataset
from sylva_forge.services.storage import ArtifactStore

logger = logging.getLogger(__name__)

BOTH = "both"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("dataset", help="Training datasets")
    actions = parser.add_subparsers(dest="dataset_action", required=True)

    build = actions.add_parser("build", help="Partition scene clouds into labeled subclouds")
    build.add_argument("--scenes", nargs="+", required=True, help="Scene CSV files or globs")
    build.add_argument(
        "--mode", choices=[m.value for m in DatasetMode] + [BOTH], default=None,
        help="Dataset variant; 'both' writes lidar/ and camera/ subdirectories",
    )
    build.add_argument("--target-size", type=positive_int, default=None)
    build.add_argument("--val-ratio", type=float, default=None)
    build.add_argument("--noise-sigma", type=float, default=None)
    build.add_argument("--normalize", action="store_true", default=None)
    add_config(build)
    add_seed(build)
    add_threads(build)
    add_out(build, "Dataset directory")
    build.set_defaults(handler=run, command_path=("dataset", "build"))


def expand_scenes(patterns: list[str]) -> list[Path]:
    """Files matched by each pattern, sorted per pattern, duplicates dropped."""
    paths: list[Path] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern)) if glob.has_magic(pattern) else [pattern]
        if not matches:
            raise ConfigError(f"No scene files match '{pattern}'")
        paths.extend(Path(m) for m in matches if Path(m) not in paths)
    return paths


def dataset_from_flags(args: argparse.Namespace, base: DatasetConfig, mode: str) -> DatasetConfig:
    update = base.model_dump()
    update["mode"] = mode
    overrides = {
        "target_size": args.target_size,
        "val_ratio": args.val_ratio,
        "noise_sigma": args.noise_sigma,
        "normalize": args.normalize,
    }
    update.update({k: v for k, v in overrides.items() if v is not None})
    return DatasetConfig.model_validate(update)


def run(args: argparse.Namespace) -> int:
    config, _ = load_config(args)
    seed = resolve_seed(args, config)
    scenes = expand_scenes(args.scenes)
    requested = args.mode or config.dataset.mode.value
    modes = [m.value for m in DatasetMode] if requested == BOTH else [requested]

    with ArtifactStore(args.out) as store:
        for mode in modes:
            dataset_config = dataset_from_flags(args, config.dataset, mode)
            prefix = "" if len(modes) == 1 else f"{mode}/"
            build_dataset(scenes, dataset_config, config.sensor, seed, store, args.threads, prefix)
    return 0
