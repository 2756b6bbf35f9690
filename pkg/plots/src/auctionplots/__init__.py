"""Figures for reply-auction sweep CSVs."""

from .csvdata import COLUMNS, EmptyData, Row, SchemaError, load_rows, per_run
from .render import KINDS, FigureSpec, render
from .stats import FitSummary, GroupSummary, least_squares, summarize

__version__ = "0.1.0"

__all__ = [
    "COLUMNS",
    "EmptyData",
    "FigureSpec",
    "FitSummary",
    "GroupSummary",
    "KINDS",
    "Row",
    "SchemaError",
    "least_squares",
    "load_rows",
    "per_run",
    "render",
    "summarize",
]
