#!/usr/bin/env python3
"""Sweep (lambda0, beta) and map where alpha1 never reaches zero."""
import argparse
import sys
from pathlib import Path

# Add lib to path
sys.path.insert(0, str(Path(__file__).parent))

from rich.panel import Panel

from lib.cli import EXIT_OK, RunContext, script_main
from lib.config_loader import build_sweep_spec
from lib.sweep_runner import result_rows, run_sweep


def cmd_sweep(ctx: RunContext, args: argparse.Namespace) -> int:
    """Run every cell, write sweep.csv in cell order and summary.json."""
    spec = build_sweep_spec(ctx.scenario)
    results = run_sweep(spec, ctx.settings.get_sweep_workers())
    ctx.storage.write_csv("sweep.csv", spec.columns, result_rows(spec, results))

    never = sum(1 for res in results if not res.separates)
    ctx.storage.write_json("summary.json", {
        'kind': spec.kind.value,
        'cells': len(results),
        'never_separates': never,
        'min_alpha1': min(res.min_alpha1 for res in results),
    })

    if not ctx.quiet:
        ctx.console.print(Panel.fit(
            f"[bold]{len(results)}[/bold] cells on {spec.kind.value}\n"
            f"[green]{never} never separate[/green], "
            f"[red]{len(results) - never} reach alpha1 = 0[/red]",
            title="[bold cyan]Sweep[/bold cyan]", border_style="cyan",
        ))
        ctx.console.print(f"[green]✓[/green] Wrote {ctx.storage.get_path('sweep.csv')}")
    return EXIT_OK


def main():
    """Run the sweep command."""
    script_main(cmd_sweep, "Sweep inflow speed and Coriolis parameter")


if __name__ == "__main__":
    main()
