"""Rendering toolkit for ndlab run outputs."""

from .figspec import FigureSpec, FigureSpecError, load_spec, parse_spec, shipped_figures
from .render import MissingInputError, render

__version__ = "0.1.0"
