"""Render decay and performance-index figures from trajectory CSV files.

The input format is the simulator's export: a comma-separated header line
naming the channels, then one row per time sample.  Rendering never touches
the input file beyond reading it, and a fixed canvas geometry keeps the
output reproducible for a given matplotlib build.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (6.4, 4.0)
DPI = 150


class ColumnError(ValueError):
    """An input CSV lacks a channel the figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: where the data comes from and how the axes are drawn."""

    sources: tuple[Path, ...]
    channels: tuple[str, ...]
    xlabel: str
    ylabel: str
    logy: bool
    output: Path


def read_trajectory(path) -> dict[str, np.ndarray]:
    """Load a trajectory CSV as a column-name -> samples mapping."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
    if not header:
        raise ColumnError(f"{path}: empty file, no header line")
    names = header.split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] == 0:
        raise ColumnError(f"{path}: no data rows")
    if data.shape[1] != len(names):
        raise ColumnError(
            f"{path}: header names {len(names)} columns but rows have "
            f"{data.shape[1]}")
    return {name: data[:, k] for k, name in enumerate(names)}


def _require(columns: dict, needed, path) -> None:
    missing = [name for name in needed if name not in columns]
    if missing:
        raise ColumnError(
            f"{path}: missing required columns {missing} "
            f"(found {sorted(columns)})")


def _render(spec: FigureSpec, draw) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    try:
        draw(ax)
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel)
        if spec.logy:
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output)
    finally:
        plt.close(fig)
    return spec.output


def render_decay_figure(csv_paths, output, labels=None, logy=False) -> Path:
    """Plot the decay channel |w|_H1 + |u| of one or more runs on one axis.

    Passing several CSVs (say an undisturbed run and a disturbed one)
    overlays their curves; ``labels`` names them in the legend and defaults
    to the file stems.
    """
    paths = [Path(p) for p in (csv_paths if isinstance(csv_paths, (list, tuple))
                               else [csv_paths])]
    if not paths:
        raise ValueError("at least one trajectory CSV is required")
    if labels is not None and len(labels) != len(paths):
        raise ValueError("one label per trajectory CSV is required")
    spec = FigureSpec(sources=tuple(paths), channels=("t", "normH1_w", "u"),
                      xlabel="t", ylabel="|w|_H1 + |u|", logy=logy,
                      output=Path(output))
    runs = []
    for path in paths:
        columns = read_trajectory(path)
        _require(columns, spec.channels, path)
        runs.append((columns["t"],
                     columns["normH1_w"] + np.abs(columns["u"])))

    def draw(ax):
        for (t, signal), path, k in zip(runs, paths, range(len(runs))):
            name = labels[k] if labels is not None else path.stem
            ax.plot(t, signal, label=name)
        if len(runs) > 1 or labels is not None:
            ax.legend()

    return _render(spec, draw)


def render_gain_figure(csv_path, output) -> Path:
    """Plot the running performance index J(t) with a zero reference line."""
    path = Path(csv_path)
    spec = FigureSpec(sources=(path,), channels=("t", "J"), xlabel="t",
                      ylabel="J(t)", logy=False, output=Path(output))
    columns = read_trajectory(path)
    _require(columns, spec.channels, path)

    def draw(ax):
        ax.axhline(0.0, color="black", linewidth=0.8, linestyle="--")
        ax.plot(columns["t"], columns["J"])

    return _render(spec, draw)
