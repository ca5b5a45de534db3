#!/usr/bin/env python3
"""Boundary-layer separation toolkit - unified entry point."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add lib to path
sys.path.insert(0, str(Path(__file__).parent))

from lib.cli import add_common_arguments, run_command
from ode import cmd_ode
from simulate import cmd_simulate
from sweep import cmd_sweep
from verify import cmd_operators_check, cmd_verify

COMMANDS = {
    'ode': (cmd_ode, "integrate the separation ODE for a scenario", True),
    'simulate': (cmd_simulate, "run the near-boundary Navier-Stokes solver", True),
    'verify': (cmd_verify, "run the verification battery", False),
    'sweep': (cmd_sweep, "sweep (lambda0, beta) for the never-separating regime", True),
    'operators-check': (cmd_operators_check, "geometry identities and operator convergence", False),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="separation",
        description="Boundary-layer separation on the sphere, hyperbolic plane and Euclidean plane",
    )
    sub = parser.add_subparsers(dest='command', required=True)
    for name, (_, help_text, config_required) in COMMANDS.items():
        add_common_arguments(sub.add_parser(name, help=help_text), config_required)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse the command line and run one command; returns the exit code."""
    args = build_parser().parse_args(argv)
    return run_command(COMMANDS[args.command][0], args)


if __name__ == "__main__":
    sys.exit(main())
