"""
Main command router.

Aggregates all subcommand parsers under one `forge` parser.
"""

import argparse
import logging

from sylva_forge import __version__
from sylva_forge.cli.commands import (
    dataset,
    demo,
    evaluation,
    grass,
    occlude,
    pipeline,
    scene,
    terrain,
    texture,
)
from sylva_forge.core.config import get_settings
from sylva_forge.core.exceptions import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = [terrain, texture, pipeline, grass, scene, occlude, dataset, evaluation, demo]


class ForgeArgumentParser(argparse.ArgumentParser):
    """Parser that raises ConfigError instead of exiting on bad arguments."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> ForgeArgumentParser:
    parser = ForgeArgumentParser(
        prog="forge",
        description="Procedural forest point clouds with per-point semantic labels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
        help=f"Log level on standard error (default: FORGE_LOG_LEVEL, currently {get_settings().log_level})",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser
