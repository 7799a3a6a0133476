"""
Shared command-line dependencies.

Flag helpers every subcommand reuses, config loading and the run
manifest written next to each artifact.
"""

import argparse
import logging
from pathlib import Path
from typing import Any

from sylva_forge.core.config import get_settings
from sylva_forge.core.exceptions import ConfigError
from sylva_forge.core.rng import SEED_MAX
from sylva_forge.models.config import SceneConfig, load_scene_config
from sylva_forge.models.reports import RunManifest
from sylva_forge.services.storage import ArtifactStore

logger = logging.getLogger(__name__)

# Flags that never reach a manifest: where outputs go and how many threads ran
UNRECORDED_FLAGS = {"out", "threads", "handler", "log_level", "command_path"}


def seed_value(text: str) -> int:
    try:
        seed = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got '{text}'") from None
    if not 0 <= seed <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64 - 1], got {seed}")
    return seed


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed", type=seed_value, default=None,
        help="64-bit scene seed (default: the config's seed, else 0)",
    )


def add_threads(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threads", type=positive_int, default=None,
        help=f"Worker cap (default: FORGE_THREADS, currently {get_settings().threads})",
    )


def add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="Scene document (JSON)")


def add_out(parser: argparse.ArgumentParser, help_text: str) -> None:
    parser.add_argument("--out", type=Path, required=True, help=help_text)


def load_config(args: argparse.Namespace) -> tuple[SceneConfig, Path]:
    """Scene document named by --config (defaults otherwise) and its directory."""
    path: Path | None = getattr(args, "config", None)
    if path is None:
        return SceneConfig(), Path(".")
    return load_scene_config(path), path.parent


def resolve_seed(args: argparse.Namespace, config: SceneConfig | None = None) -> int:
    if args.seed is not None:
        return args.seed
    return config.seed if config is not None else 0


def recorded_flags(args: argparse.Namespace) -> dict[str, Any]:
    """Flags as JSON-friendly values, minus output locations and thread counts."""
    flags = {}
    for key, value in sorted(vars(args).items()):
        if key in UNRECORDED_FLAGS:
            continue
        if isinstance(value, Path):
            value = value.as_posix()
        elif isinstance(value, list):
            value = [v.as_posix() if isinstance(v, Path) else v for v in value]
        flags[key] = value
    return flags


def run_manifest(
    args: argparse.Namespace,
    seed: int,
    store: ArtifactStore,
    config: dict[str, Any] | None = None,
    counts: dict[str, int] | None = None,
) -> RunManifest:
    return RunManifest(
        tool_version=get_settings().tool_version,
        command=list(args.command_path),
        seed=seed,
        config={"flags": recorded_flags(args), **(config or {})},
        artifacts=store.written,
        counts=counts or {},
    )


def file_store(out: Path) -> tuple[ArtifactStore, str]:
    """Store rooted at the parent of a single-file output, plus the file name."""
    if out.name == "":
        raise ConfigError(f"--out must name a file, got '{out}'")
    return ArtifactStore(out.parent if str(out.parent) else Path(".")), out.name


def manifest_name_for(file_name: str) -> str:
    """Manifest next to a single-file artifact: `<name>.manifest.json`."""
    return f"{file_name}.{get_settings().manifest_name}"
