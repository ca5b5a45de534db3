#!/usr/bin/env python3
"""Run the verification battery and write a pass/fail report."""
import argparse
import math
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

# Add lib to path
sys.path.insert(0, str(Path(__file__).parent))

from rich.table import Table

from lib.cli import EXIT_OK, RunContext, script_main
from lib.errors import ConfigError, VerificationError
from lib.verification import VerificationReport, run_battery

OPERATOR_SUITES = ('geometry', 'operators')


def resolve_settings(ctx: RunContext, args: argparse.Namespace) -> Dict[str, Any]:
    """Merge settings-file defaults, the scenario's verify section and --levels."""
    settings = ctx.settings.get_verify_settings()
    section = ctx.scenario.get('verify') or {}
    if not isinstance(section, dict):
        raise ConfigError("'verify' must be a JSON object")
    thresholds = dict(settings['thresholds'])
    thresholds.update(section.get('thresholds') or {})
    for key, value in thresholds.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"verify.thresholds.{key} must be a number, got {value!r}")
    levels = args.levels if args.levels is not None else section.get('levels', settings['levels'])
    return {
        'suites': section.get('suites', settings['suites']),
        'levels': int(levels),
        'thresholds': thresholds,
    }


def print_report(ctx: RunContext, report: VerificationReport, title: str) -> None:
    table = Table(title=title)
    table.add_column("Check", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Threshold")
    table.add_column("Result")
    for c in report.checks:
        value = f"{c.value:.4g}" if math.isfinite(c.value) else str(c.value)
        status = "[green]✓ pass[/green]" if c.passed else "[red]✗ fail[/red]"
        table.add_row(f"{c.suite}/{c.name}", value, c.threshold, status)
    ctx.console.print(table)


def execute(ctx: RunContext, args: argparse.Namespace, report_name: str, title: str,
            suites: Optional[Sequence[str]] = None) -> int:
    resolved = resolve_settings(ctx, args)
    if suites is not None:
        resolved['suites'] = list(suites)
    report = run_battery(resolved['suites'], resolved['levels'], ctx.seed, resolved['thresholds'])
    ctx.storage.write_json(report_name, {
        'suites': resolved['suites'],
        'levels': resolved['levels'],
        'thresholds': resolved['thresholds'],
        **report.to_dict(),
    })
    if not ctx.quiet:
        print_report(ctx, report, title)
    if not report.passed:
        names = ", ".join(f"{c.suite}/{c.name}" for c in report.failures)
        raise VerificationError(f"{len(report.failures)} check(s) failed: {names}")
    if not ctx.quiet:
        ctx.console.print(f"[green]✓[/green] All {len(report.checks)} checks passed")
    return EXIT_OK


def cmd_verify(ctx: RunContext, args: argparse.Namespace) -> int:
    """Full battery; exit 3 when any check fails."""
    return execute(ctx, args, "verify_report.json", "Verification")


def cmd_operators_check(ctx: RunContext, args: argparse.Namespace) -> int:
    """Geometry identities and operator convergence only."""
    return execute(ctx, args, "operators_report.json", "Operator convergence", OPERATOR_SUITES)


def main():
    """Run the verify command."""
    script_main(cmd_verify, "Run the verification battery", config_required=False)


if __name__ == "__main__":
    main()
