"""Render figure files from a run's plot-data tables.

Figures land next to the delimited tables in ``<run>/plotdata/``; every
``fig_*.csv`` gets a matching ``fig_*.png``.  Axis scaling follows the
table kind (log-log for sampling laws and step-size studies, semilog-y
for error histories, linear for energy curves).
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_run"]


def _read(path: Path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _plot_lines(ax, header, data, x_label):
    x = data[:, 0]
    for k in range(1, len(header)):
        style = "--" if header[k].endswith("line") or header[k].startswith(("ref", "sampling")) else "-"
        ax.plot(x, data[:, k], style, label=header[k])
    ax.set_xlabel(x_label)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)


def _render_table(path: Path) -> Path:
    header, data = _read(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    name = path.stem
    if name == "fig_initial_sampling":
        _plot_lines(ax, header, data, "number of sampling points")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_ylabel("L2 error")
    elif name == "fig_timestep_plateau":
        _plot_lines(ax, header, data, "time step size")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.invert_xaxis()
        ax.set_ylabel("final-time L2 error")
    elif name in ("fig_longtime_error", "fig_wavefunction_error"):
        _plot_lines(ax, header, data, "time")
        ax.set_yscale("log")
        ax.set_ylabel("L2 error")
    elif name == "fig_norm_residue":
        _plot_lines(ax, header, data, "time")
        ax.set_yscale("log")
        ax.set_ylabel("norm / residue")
    else:
        _plot_lines(ax, header, data, "time")
        ax.set_ylabel("energy")
    fig.tight_layout()
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def render_run(run_dir) -> list[Path]:
    """Render every plot-data table of a run; returns the written image paths."""
    run_dir = Path(run_dir)
    plotdir = run_dir / "plotdata"
    if not plotdir.is_dir():
        raise FileNotFoundError(f"{run_dir}: no plotdata directory (run emit_plotdata first)")
    if not (run_dir / "run.json").exists():
        raise FileNotFoundError(f"{run_dir}: no run.json")
    json.loads((run_dir / "run.json").read_text())
    return [_render_table(p) for p in sorted(plotdir.glob("fig_*.csv"))]
