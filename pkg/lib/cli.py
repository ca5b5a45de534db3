"""Shared plumbing for the command scripts: flags, logging, exit codes."""
import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional

from rich.console import Console
from rich.logging import RichHandler

from lib.config_loader import ConfigLoader, config_hash, load_config, scenario_seed
from lib.errors import ConfigError, SeparationError, VerificationError
from lib.storage import Storage

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = ConfigError.exit_code
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = VerificationError.exit_code


def add_common_arguments(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument('--config', required=config_required, help="scenario JSON document")
    parser.add_argument('--out', help="output directory (default from settings)")
    parser.add_argument('--seed', type=int, help="seed for randomized manufactured fields")
    parser.add_argument('--levels', type=int, help="refinement levels for verification")
    parser.add_argument('--quiet', action='store_true', help="warnings only, no summary panel")


def setup_logging(quiet: bool = False) -> None:
    """Route library logging through rich on stderr."""
    handler = RichHandler(console=Console(stderr=True), show_time=False, show_path=False)
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO,
                        format="%(message)s", handlers=[handler], force=True)


@dataclass
class RunContext:
    """Resolved inputs of one command invocation."""

    settings: ConfigLoader
    scenario: Dict[str, Any]
    seed: int
    storage: Storage
    console: Console
    quiet: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace, console: Console) -> "RunContext":
        settings = load_config()
        scenario = settings.load_scenario(args.config) if args.config else {}
        seed = scenario_seed(scenario, args.seed)
        digest = config_hash(scenario, seed, settings.applied_settings(args.levels))
        out = Path(args.out) if args.out else settings.get_output_dir()
        logger.info("config sha256 %s, seed %d, output %s", digest[:12], seed, out)
        return cls(settings, scenario, seed, Storage(out, digest, seed), console, args.quiet)


def run_command(command: Callable[[RunContext, argparse.Namespace], int],
                args: argparse.Namespace, console: Optional[Console] = None) -> int:
    """Run one command and map failures to exit codes.

    Returns:
        0 on success, 1 config error, 2 numerical failure, 3 verification failure
    """
    console = console or Console()
    err = Console(stderr=True)
    setup_logging(args.quiet)
    try:
        ctx = RunContext.from_args(args, console)
        return command(ctx, args)
    except SeparationError as e:
        err.print(f"[red]Error: {e}[/red]")
        return e.exit_code
    except (ValueError, ArithmeticError) as e:
        err.print(f"[red]Error: {e}[/red]")
        return getattr(e, 'exit_code', EXIT_NUMERICAL)
    except OSError as e:
        err.print(f"[red]Error: {e}[/red]")
        return EXIT_CONFIG


def script_main(command: Callable[[RunContext, argparse.Namespace], int],
                description: str, config_required: bool = True) -> None:
    parser = argparse.ArgumentParser(description=description)
    add_common_arguments(parser, config_required)
    sys.exit(run_command(command, parser.parse_args()))
