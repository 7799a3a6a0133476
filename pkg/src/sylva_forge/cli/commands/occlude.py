"""`forge occlude`: camera-like occlusion and measurement noise on a scene cloud."""

import argparse
import logging
from pathlib import Path

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
from sylva_forge.core.exceptions import ConfigError
from sylva_forge.core.rng import RngStream
from sylva_forge.models.config import SensorConfig
from sylva_forge.models.params import NoiseParams, OcclusionParams
from sylva_forge.services.scene import export_csv, import_csv
from sylva_forge.services.sensor import add_noise, default_viewpoints, occlude

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("occlude", help="Hidden point removal from top-down viewpoints")
    parser.add_argument("--in", dest="input", type=Path, required=True, help="Scene cloud CSV")
    parser.add_argument("--gamma", type=float, default=None, help="Flip radius exponent")
    parser.add_argument(
        "--altitude", default="auto",
        help="Meters above the highest point, or 'auto' for the configured offset",
    )
    parser.add_argument(
        "--grid", default=None,
        help="Survey spacing 'sx,sy' in meters, or 'single' for one centered viewpoint",
    )
    parser.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian noise per axis")
    add_config(parser)
    add_seed(parser)
    add_threads(parser)
    add_out(parser, "Occluded cloud CSV to write")
    parser.set_defaults(handler=run, command_path=("occlude",))


def sensor_from_flags(args: argparse.Namespace, base: SensorConfig) -> SensorConfig:
    """Sensor section of the scene document with flag overrides applied."""
    update = base.model_dump()
    if args.gamma is not None:
        update["gamma"] = args.gamma
    if args.altitude != "auto":
        try:
            update["altitude_offset"] = float(args.altitude)
        except ValueError:
            raise ConfigError(f"--altitude must be a number or 'auto', got '{args.altitude}'") from None
    if args.grid == "single":
        update["grid"] = None
    elif args.grid is not None:
        try:
            sx, sy = (float(v) for v in args.grid.split(","))
        except ValueError:
            raise ConfigError(f"--grid must be 'sx,sy' or 'single', got '{args.grid}'") from None
        update["grid"] = (sx, sy)
    return SensorConfig.model_validate(update)


def run(args: argparse.Namespace) -> int:
    config, _ = load_config(args)
    seed = resolve_seed(args, config)
    sensor = sensor_from_flags(args, config.sensor)
    noise = NoiseParams(sigma=args.noise_sigma)

    cloud = import_csv(args.input)
    viewpoints = default_viewpoints(cloud, sensor)
    visible = cloud
    if viewpoints:
        visible = occlude(cloud, OcclusionParams(gamma=sensor.gamma, viewpoints=viewpoints), args.threads)
    visible = add_noise(visible, noise, RngStream.root(seed).derive("occlude").derive("noise"))

    store, name = file_store(args.out)
    with store:
        export_csv(visible, store.path(name))
        manifest = run_manifest(
            args,
            seed,
            store,
            {"sensor": sensor.model_dump(mode="json"), "noise": noise.model_dump(mode="json")},
            {"input_points": len(cloud), "visible_points": len(visible), "viewpoints": len(viewpoints)},
        )
        store.write_manifest(manifest, manifest_name_for(name))
    return 0
