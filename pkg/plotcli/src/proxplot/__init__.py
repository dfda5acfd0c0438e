"""Figure rendering for proxgrad benchmark CSV traces."""

from .render import PlotSpec, RenderResult, load_blocks, render

__version__ = "0.1.0"
