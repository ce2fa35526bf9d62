"""``chaos-ld`` entry point."""
import argparse
import logging
import sys
from typing import Optional

from pydantic import ValidationError

from chaos_ld import __version__
from chaos_ld.cli import classifier, datasets, reproduce, traces
from chaos_ld.cli.common import CommandContext, load_config, resolve_output_dir
from chaos_ld.config import get_settings
from chaos_ld.exceptions import ChaosLDError, ConfigurationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = ConfigurationError.exit_code
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaos-ld",
        description="Chaos detection with Lagrangian-descriptor indicators and a linear SVM",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        dest="log_level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="overrides CHAOS_LD_LOG_LEVEL",
    )
    parser.add_argument("--threads", type=int, help="worker threads (fallback CHAOS_LD_THREADS)")
    parser.add_argument("--output-dir", dest="output_dir", help="where outputs are written")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    datasets.register(subparsers)
    classifier.register(subparsers)
    traces.register(subparsers)
    reproduce.register(subparsers)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Run one sub-command and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()

    logging.basicConfig(
        level=getattr(logging, (args.log_level or settings.log_level).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be at least 1")
        return EXIT_CONFIG

    context: Optional[CommandContext] = None
    try:
        config = load_config(args, args.config_model)
        context = CommandContext(
            args.command,
            resolve_output_dir(config, settings),
            settings,
            args.threads or settings.threads,
        )
        context.echo_config(config)
        args.handler(config, context)
        return EXIT_OK
    except ValidationError as e:
        logger.error(f"Invalid {args.command} configuration:\n{e}")
        code = EXIT_CONFIG
    except ChaosLDError as e:
        logger.error(f"{args.command} failed: {e}")
        code = e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        code = EXIT_IO
    if context is not None:
        context.cleanup()
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
