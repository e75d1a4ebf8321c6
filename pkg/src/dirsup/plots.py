"""Line plots written as standalone SVG with reproducible bytes."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

__all__ = ["line_plot"]

_RC = {
    "svg.hashsalt": "dirsup",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "lines.markersize": 3.5,
}


def _finite(xs: Sequence[float], ys: Sequence[float], logx: bool, logy: bool):
    pts = []
    for x, y in zip(xs, ys):
        if x is None or y is None or not (math.isfinite(x) and math.isfinite(y)):
            continue
        if (logx and x <= 0) or (logy and y <= 0):
            continue
        pts.append((x, y))
    pts.sort()
    return [p[0] for p in pts], [p[1] for p in pts]


def line_plot(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], path: str | Path,
              xlabel: str, ylabel: str, title: str = "", logx: bool = True,
              logy: bool = False) -> Path:
    """Draw one polyline per series and save it as SVG.

    Points with missing or non-finite coordinates are dropped, as are
    nonpositive values on a log axis.  Series are drawn in sorted key order.
    """
    path = Path(path)
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(6.0, 4.0))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        drawn = 0
        for key in sorted(series):
            x, y = _finite(*series[key], logx, logy)
            if x:
                ax.plot(x, y, marker="o", label=key)
                drawn += 1
        if logx and drawn:
            ax.set_xscale("log")
        if logy and drawn:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if drawn > 1 or (drawn == 1 and len(series) > 1):
            ax.legend(loc="best", fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path
