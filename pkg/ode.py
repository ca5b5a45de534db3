#!/usr/bin/env python3
"""Integrate the wall-shear ODE for a scenario and detect separation."""
import argparse
import sys
from pathlib import Path
from typing import Any, Dict

# Add lib to path
sys.path.insert(0, str(Path(__file__).parent))

from rich.panel import Panel
from rich.table import Table

from lib.cli import EXIT_OK, RunContext, script_main
from lib.config_loader import build_ode_run
from lib.errors import DegenerateLimitError
from lib.separation_ode import (
    OdeMode,
    asymptotic_fixed_point,
    classify_profile,
    classify_streamlines,
    detect_separation,
    integrate,
)
from lib.storage import TRACE_COLUMNS


def classifications(run: Dict[str, Any], t: float, alpha1: float, tol: Dict[str, float]) -> Dict[str, str]:
    geom = run['geometry']
    a2, a3, eta = run['schedule'](t)
    coeffs = geom.coefficients(alpha1, a2, a3, eta)
    return {
        'streamlines': classify_streamlines(eta, tol['eta']).value,
        'profile': classify_profile(coeffs, tol['profile_rho']).value,
    }


def cmd_ode(ctx: RunContext, args: argparse.Namespace) -> int:
    """Integrate, write trace.csv and summary.json, print a summary."""
    run = build_ode_run(ctx.scenario, ctx.settings.get_ode_defaults())
    tol = ctx.settings.get_tolerances()
    geom, sched = run['geometry'], run['schedule']

    trace = integrate(run['mode'], run['alpha1_0'], sched, geom, run['t_end'], run['dt'])
    t0 = detect_separation(trace)

    alpha1_star = None
    if sched.is_constant:
        try:
            alpha1_star = asymptotic_fixed_point(geom, *sched(0.0))
        except DegenerateLimitError as e:
            ctx.console.print(f"[yellow]{e}[/yellow]")

    summary = {
        'mode': run['mode'].value,
        'k': geom.k,
        'forcing': geom.forcing if run['mode'] is OdeMode.CORIOLIS else 0.0,
        't0': t0,
        'alpha1_star': alpha1_star,
        'alpha1_final': float(trace.alpha1[-1]),
        'alpha1_min': float(trace.alpha1.min()),
        'classifications': {
            'initial': classifications(run, 0.0, float(trace.alpha1[0]), tol),
            'final': classifications(run, float(trace.times[-1]), float(trace.alpha1[-1]), tol),
        },
    }
    ctx.storage.write_csv("trace.csv", TRACE_COLUMNS, trace.rows())
    ctx.storage.write_json("summary.json", summary)

    if not ctx.quiet:
        table = Table(show_header=False, box=None)
        table.add_row("mode", summary['mode'])
        table.add_row("k", f"{geom.k:.6g}")
        table.add_row("steps", str(len(trace) - 1))
        table.add_row("alpha1(t_end)", f"{summary['alpha1_final']:.10g}")
        table.add_row("alpha1*", "n/a" if alpha1_star is None else f"{alpha1_star:.10g}")
        table.add_row("separation t0",
                      "[green]never[/green]" if t0 is None else f"[red]{t0:.6g}[/red]")
        table.add_row("streamlines", summary['classifications']['final']['streamlines'])
        ctx.console.print(Panel(table, title="[bold cyan]Separation ODE[/bold cyan]", border_style="cyan"))
        ctx.console.print(f"[green]✓[/green] Wrote {ctx.storage.get_path('trace.csv')}")
    return EXIT_OK


def main():
    """Run the ode command."""
    script_main(cmd_ode, "Integrate the boundary-layer separation ODE")


if __name__ == "__main__":
    main()
