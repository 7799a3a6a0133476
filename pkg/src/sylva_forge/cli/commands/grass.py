"""`forge grass`: blades over a heightmap from a density texture."""

import argparse
import logging
from pathlib import Path

from sylva_forge.cli.deps import (
    add_out,
    add_seed,
    add_threads,
    file_store,
    manifest_name_for,
    positive_int,
    resolve_seed,
    run_manifest,
)
from sylva_forge.core.rng import RngStream
from sylva_forge.models.params import GrassParams
from sylva_forge.services.grass import instantiate_grass, sample_anchors
from sylva_forge.services.scene import export_csv
from sylva_forge.services.terrain import read_heightmap
from sylva_forge.services.texture import read_pgm

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("grass", help="Generate grass blades as a labeled cloud")
    parser.add_argument("--terrain", type=Path, required=True, help="Heightmap file")
    parser.add_argument("--density", type=Path, required=True, help="Density PGM over the terrain")
    parser.add_argument("--tile", type=positive_int, default=4, help="Tile size in pixels")
    parser.add_argument("--max-per-tile", type=int, default=1024, help="Anchors of a full tile")
    parser.add_argument("--segments", type=positive_int, default=4, help="Segments per blade")
    add_seed(parser)
    add_threads(parser)
    add_out(parser, "Cloud CSV to write")
    parser.set_defaults(handler=run, command_path=("grass",))


def run(args: argparse.Namespace) -> int:
    seed = resolve_seed(args)
    params = GrassParams(
        tile_size=args.tile, max_per_tile=args.max_per_tile, segments=args.segments
    )
    hm = read_heightmap(args.terrain)
    density = read_pgm(args.density, hm.extent)
    anchors = sample_anchors(density, params.tile_size, params.max_per_tile)
    blades = instantiate_grass(anchors, hm, params, RngStream.root(seed).derive("grass"), args.threads)

    store, name = file_store(args.out)
    with store:
        export_csv(blades.to_cloud(), store.path(name))
        manifest = run_manifest(
            args,
            seed,
            store,
            {"grass": params.model_dump(mode="json")},
            {"blades": len(blades), "vertices": blades.vertex_count},
        )
        store.write_manifest(manifest, manifest_name_for(name))
    return 0
