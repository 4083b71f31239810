"""Offline figure generation from cc-ik output files."""
from .figures import (
    FigureJob,
    SchemaError,
    plot_success_bars,
    plot_success_curves,
    plot_trajectory,
    plot_workspace,
    render,
)

__all__ = [
    "FigureJob",
    "SchemaError",
    "plot_trajectory",
    "plot_workspace",
    "plot_success_curves",
    "plot_success_bars",
    "render",
]

__version__ = "0.1.0"
