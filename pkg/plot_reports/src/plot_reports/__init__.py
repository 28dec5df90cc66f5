"""Static figures from closed-loop trajectory CSV exports."""

from plot_reports.figures import (
    ColumnError,
    FigureSpec,
    read_trajectory,
    render_decay_figure,
    render_gain_figure,
)

__all__ = [
    "ColumnError",
    "FigureSpec",
    "read_trajectory",
    "render_decay_figure",
    "render_gain_figure",
]

__version__ = "0.1.0"
