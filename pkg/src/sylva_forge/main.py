"""
`forge` entry point.

Parses the command line, configures logging and maps failures to exit
codes: 0 success, 1 validation error, 2 I/O error.
"""

import logging
import sys
import time
from collections.abc import Sequence

from sylva_forge.cli.router import build_parser
from sylva_forge.core.config import get_settings
from sylva_forge.core.exceptions import EXIT_OK, exit_code_for

logger = logging.getLogger(__name__)


def configure_logging(level: str | None = None) -> None:
    settings = get_settings()
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format=settings.log_format,
        stream=sys.stderr,
        force=True,
    )


def run(argv: Sequence[str] | None = None) -> int:
    """Run one `forge` command line and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except Exception as e:
        configure_logging()
        logger.error(f"{e}")
        return exit_code_for(e)

    configure_logging(args.log_level)
    command = " ".join(args.command_path)
    start_time = time.time()
    logger.info(f"Command: {command}")
    try:
        code = args.handler(args)
    except Exception as e:
        logger.error(
            f"Error: {command} exception={type(e).__name__} "
            f"duration={time.time() - start_time:.3f}s: {e}"
        )
        return exit_code_for(e)
    logger.info(f"Command done: {command} status={code} duration={time.time() - start_time:.3f}s")
    return code if code is not None else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
