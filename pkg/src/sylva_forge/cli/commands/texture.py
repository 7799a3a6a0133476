"""`forge texture`: noise and Voronoi textures, and pixelwise logic on PGM files."""

import argparse
import logging

from sylva_forge.cli.deps import (
    add_out,
    add_seed,
    file_store,
    manifest_name_for,
    positive_int,
    resolve_seed,
    run_manifest,
)
from sylva_forge.core.rng import derive_seed
from sylva_forge.models.enums import TextureOp, VoronoiMode
from sylva_forge.models.params import NoiseSourceParams, VoronoiSourceParams
from sylva_forge.services.texture import (
    Texture,
    read_pgm,
    texture_from_noise,
    texture_from_voronoi,
    texture_logic,
    write_pgm,
)

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("texture", help="Create or combine greyscale textures")
    actions = parser.add_subparsers(dest="texture_action", required=True)

    noise = actions.add_parser("noise", help="Fractal gradient-noise texture")
    noise.add_argument("--width", type=positive_int, default=64)
    noise.add_argument("--height", type=positive_int, default=64)
    noise.add_argument("--octaves", type=positive_int, default=4)
    noise.add_argument("--lacunarity", type=float, default=2.0)
    noise.add_argument("--persistence", type=float, default=0.5)
    noise.add_argument("--base-frequency", type=float, default=0.05, help="Cycles per pixel")
    add_seed(noise)
    add_out(noise, "PGM file to write")
    noise.set_defaults(handler=run_noise, command_path=("texture", "noise"))

    voronoi = actions.add_parser("voronoi", help="Voronoi distance or cellular texture")
    voronoi.add_argument("--width", type=positive_int, default=64)
    voronoi.add_argument("--height", type=positive_int, default=64)
    voronoi.add_argument("--sites", type=positive_int, default=16)
    voronoi.add_argument("--mode", choices=[m.value for m in VoronoiMode], default="distance")
    add_seed(voronoi)
    add_out(voronoi, "PGM file to write")
    voronoi.set_defaults(handler=run_voronoi, command_path=("texture", "voronoi"))

    apply = actions.add_parser("apply", help="Pixelwise operation on one or two PGM files")
    apply.add_argument("--op", choices=[op.value for op in TextureOp], required=True)
    apply.add_argument("--a", dest="input_a", required=True, help="First input PGM")
    apply.add_argument("--b", dest="input_b", default=None, help="Second input PGM (binary ops)")
    apply.add_argument("--t", type=float, default=0.5, help="Threshold level")
    add_out(apply, "PGM file to write")
    apply.set_defaults(handler=run_apply, command_path=("texture", "apply"), seed=None)


def _write(args: argparse.Namespace, texture: Texture, seed: int) -> int:
    store, name = file_store(args.out)
    with store:
        write_pgm(texture, store.path(name))
        manifest = run_manifest(
            args, seed, store, counts={"width": texture.width, "height": texture.height}
        )
        store.write_manifest(manifest, manifest_name_for(name))
    return 0


def run_noise(args: argparse.Namespace) -> int:
    seed = resolve_seed(args)
    params = NoiseSourceParams(
        width=args.width,
        height=args.height,
        octaves=args.octaves,
        lacunarity=args.lacunarity,
        persistence=args.persistence,
        base_frequency=args.base_frequency,
    )
    texture = texture_from_noise(
        params.width, params.height, params, derive_seed(seed, "texture")
    )
    return _write(args, texture, seed)


def run_voronoi(args: argparse.Namespace) -> int:
    seed = resolve_seed(args)
    params = VoronoiSourceParams(
        width=args.width, height=args.height, sites=args.sites, mode=args.mode
    )
    texture = texture_from_voronoi(
        params.width, params.height, params.sites, derive_seed(seed, "texture"), params.mode
    )
    return _write(args, texture, seed)


def run_apply(args: argparse.Namespace) -> int:
    a = read_pgm(args.input_a)
    b = read_pgm(args.input_b) if args.input_b else None
    texture = texture_logic(TextureOp(args.op), a, b, t=args.t)
    return _write(args, texture, 0)
