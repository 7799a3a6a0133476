"""`forge terrain`: heightmap from the scene document's terrain section."""

import argparse
import logging

from sylva_forge.cli.deps import (
    add_config,
    add_out,
    add_seed,
    add_threads,
    file_store,
    load_config,
    manifest_name_for,
    resolve_seed,
    run_manifest,
)
from sylva_forge.core.rng import derive_seed
from sylva_forge.services.terrain import generate_heightmap, write_heightmap

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("terrain", help="Generate a heightmap (SYLVHM01 binary)")
    add_config(parser)
    add_seed(parser)
    add_threads(parser)
    add_out(parser, "Heightmap file to write")
    parser.set_defaults(handler=run, command_path=("terrain",))


def run(args: argparse.Namespace) -> int:
    config, _ = load_config(args)
    seed = resolve_seed(args, config)
    store, name = file_store(args.out)
    with store:
        terrain = config.terrain
        hm = generate_heightmap(terrain, derive_seed(seed, terrain.seed_label), args.threads)
        write_heightmap(hm, store.path(name))
        manifest = run_manifest(
            args,
            seed,
            store,
            {"terrain": terrain.model_dump(mode="json")},
            {"resolution": hm.resolution},
        )
        store.write_manifest(manifest, manifest_name_for(name))
    return 0
