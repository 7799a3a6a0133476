"""`forge scene build`: terrain, pipelines, grass and prefabs into one labeled cloud."""

import argparse
import logging

from sylva_forge.cli.deps import (
    add_config,
    add_out,
    add_seed,
    add_threads,
    load_config,
    resolve_seed,
    run_manifest,
)
from sylva_forge.models.config import SceneConfig
from sylva_forge.services.pipeline import write_placements_csv
from sylva_forge.services.scene import SceneBuild, build_scene, export_csv, export_parquet, export_ply
from sylva_forge.services.storage import ArtifactStore
from sylva_forge.services.terrain import write_heightmap
from sylva_forge.services.texture import write_pgm

logger = logging.getLogger(__name__)

SCENE_FILE = "scene.csv"


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("scene", help="Scene assembly")
    actions = parser.add_subparsers(dest="scene_action", required=True)

    build = actions.add_parser("build", help="Build a scene from a scene document")
    add_config(build)
    add_seed(build)
    add_threads(build)
    build.add_argument("--ply", action="store_true", help="Also write scene.ply")
    build.add_argument("--parquet", action="store_true", help="Also write scene.parquet")
    add_out(build, "Output directory")
    build.set_defaults(handler=run, command_path=("scene", "build"))


def write_scene(
    store: ArtifactStore,
    result: SceneBuild,
    prefix: str = "",
    ply: bool = False,
    parquet: bool = False,
) -> dict[str, int]:
    """Write every artifact of a scene build; returns the counts for the manifest."""
    write_heightmap(result.heightmap, store.path(f"{prefix}heightmap.bin"))
    write_placements_csv(result.placements, store.path(f"{prefix}placements.csv"))
    if result.grass_density is not None:
        write_pgm(result.grass_density, store.path(f"{prefix}grass_density.pgm"))
    export_csv(result.cloud, store.path(f"{prefix}{SCENE_FILE}"))
    if ply:
        export_ply(result.cloud, store.path(f"{prefix}scene.ply"))
    if parquet:
        export_parquet(result.cloud, store.path(f"{prefix}scene.parquet"))
    return {
        "points": len(result.cloud),
        "instances": sum(len(s) for s in result.placements),
        "blades": len(result.blades) if result.blades is not None else 0,
        **result.cloud.label_counts(),
    }


def scene_manifest_config(config: SceneConfig, seed: int) -> dict:
    return {"scene": config.model_copy(update={"seed": seed}).model_dump(mode="json")}


def run(args: argparse.Namespace) -> int:
    config, base_dir = load_config(args)
    seed = resolve_seed(args, config)
    with ArtifactStore(args.out) as store:
        result = build_scene(config, seed, base_dir, args.threads)
        counts = write_scene(store, result, ply=args.ply, parquet=args.parquet)
        store.write_manifest(run_manifest(args, seed, store, scene_manifest_config(config, seed), counts))
    return 0
