#!/usr/bin/env python3
"""Run the near-boundary Navier-Stokes solver and record the wall data at p0."""
import argparse
import sys
from pathlib import Path

# Add lib to path
sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
from rich.panel import Panel
from rich.table import Table

from lib.cli import EXIT_OK, RunContext, script_main
from lib.config_loader import build_solver_config
from lib.ns_solver import run
from lib.storage import DIAGNOSTIC_COLUMNS, RECORD_COLUMNS


def cmd_simulate(ctx: RunContext, args: argparse.Namespace) -> int:
    """Run, write record.csv, diagnostics.csv, snapshots and summary.json."""
    cfg = build_solver_config(ctx.scenario, ctx.seed, ctx.settings.get_tolerances())
    record = run(cfg)

    ctx.storage.write_csv("record.csv", RECORD_COLUMNS, record.rows())
    ctx.storage.write_csv("diagnostics.csv", DIAGNOSTIC_COLUMNS, record.diagnostic_rows())
    for i, snap in enumerate(record.snapshots):
        ctx.storage.save_field(f"snapshot_{i:04d}.csv", snap.state, cfg.grid)

    residual = np.asarray(record.residual)
    summary = {
        'grid': cfg.grid.to_dict(),
        'steps': len(record.times) - 1,
        'wall': cfg.wall.value,
        'lambda0': cfg.lambda0,
        'beta': cfg.beta,
        'alpha1_final': float(record.alpha1[-1]),
        'max_residual': float(residual.max()) if residual.size else 0.0,
        'max_interior_divergence': float(max(record.divergence[1:], default=0.0)),
        'energy_final': float(record.energy[-1]),
        'snapshots': len(record.snapshots),
    }
    ctx.storage.write_json("summary.json", summary)

    if not ctx.quiet:
        table = Table(show_header=False, box=None)
        table.add_row("grid", f"{cfg.grid.Nr} x {cfg.grid.Ntheta}")
        table.add_row("steps", str(summary['steps']))
        table.add_row("alpha1(t_end)", f"{summary['alpha1_final']:.8g}")
        table.add_row("max ODE residual", f"{summary['max_residual']:.3e}")
        table.add_row("max interior div", f"{summary['max_interior_divergence']:.3e}")
        table.add_row("kinetic energy", f"{summary['energy_final']:.6g}")
        ctx.console.print(Panel(table, title="[bold cyan]Simulation[/bold cyan]", border_style="cyan"))
        ctx.console.print(f"[green]✓[/green] Wrote {ctx.storage.get_path('record.csv')}")
    return EXIT_OK


def main():
    """Run the simulate command."""
    script_main(cmd_simulate, "Run the near-boundary Navier-Stokes solver")


if __name__ == "__main__":
    main()
