"""SVG figures of run outputs. Output is byte-identical for identical input."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import OutputTree, read_csv  # noqa: E402

log = logging.getLogger(__name__)

_RC = {"svg.hashsalt": "pilot-dirac", "svg.fonttype": "path", "font.size": 9}


def _save(fig, path: Path):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def density_figure(header, data, path: Path, max_curves: int = 6):
    """P(x) at a few evenly spaced recorded times."""
    cols = {h: i for i, h in enumerate(header)}
    t = data[:, cols["t"]]
    times = np.unique(t)
    pick = times[np.linspace(0, len(times) - 1, min(max_curves, len(times))).round().astype(int)]
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for tt in pick:
            rows = t == tt
            ax.plot(data[rows, cols["x"]], data[rows, cols["P"]], lw=1, label=f"t = {tt:.3g}")
        ax.set_xlabel("x")
        ax.set_ylabel("P(x)")
        ax.legend(frameon=False)
        fig.tight_layout()
    _save(fig, path)


def trajectory_figure(header, data, path: Path):
    """Trajectory fan: x(t) of every recorded sample."""
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        t = data[:, 0]
        for i in range(1, data.shape[1]):
            ax.plot(data[:, i], t, lw=0.6, color="C0")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        fig.tight_layout()
    _save(fig, path)


def energy_figure(header, data, path: Path):
    cols = {h: i for i, h in enumerate(header)}
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        t = data[:, cols["t"]]
        for name in ("E_field", "E_particle", "E_total"):
            ax.plot(t, data[:, cols[name]], lw=1, label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend(frameon=False)
        fig.tight_layout()
    _save(fig, path)


FIGURES = (
    ("fields.csv", "density.svg", density_figure),
    ("trajectories.csv", "trajectories.svg", trajectory_figure),
    ("energy.csv", "energy.svg", energy_figure),
)


def plot_run(run_dir, tree: OutputTree | None = None) -> list[Path]:
    """Render every figure whose input exists; returns the SVGs written.

    Raises FileNotFoundError when the directory holds none of the inputs.
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"run directory {run_dir} does not exist")
    tree = OutputTree(run_dir) if tree is None else tree
    written, found = [], 0
    for src, dst, draw in FIGURES:
        path = run_dir / src
        if not path.exists():
            continue
        found += 1
        header, data = read_csv(path)
        if data.shape[0] == 0:
            log.warning("%s is empty; skipping %s", src, dst)
            continue
        draw(header, data, run_dir / dst)
        tree.add(dst)
        written.append(run_dir / dst)
    if not found:
        raise FileNotFoundError(f"no plottable outputs in {run_dir}")
    tree.write_manifest()
    return written
