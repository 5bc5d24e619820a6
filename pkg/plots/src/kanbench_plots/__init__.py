"""Offline figure rendering for kanbench CSV outputs."""

from .figures import FAMILIES, OVERLAY_POINTS, FigureSpec, render
from .io import SchemaError

__all__ = ["FAMILIES", "OVERLAY_POINTS", "FigureSpec", "render", "SchemaError"]

__version__ = "0.1.0"
