"""Standalone SVG scaling plots: log2 aleph against l with the fitted line, doubling ratios against l.

Figures are built with the object API (no pyplot state) and rendered with a fixed hash salt and
no date, so identical data gives identical bytes.
"""
import io
from typing import Optional, Sequence, Tuple

import matplotlib
from matplotlib.figure import Figure
import numpy as np

from core.errors import PreconditionError
from utils.io import ensure_parent
from utils.packing import PackingFit, packing_exponent_fit

_SVG_PARAMS = {
    "svg.hashsalt": "doubleprobe",
    "svg.fonttype": "none",
    "path.simplify": False,
}


def _render(fig: Figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context(_SVG_PARAMS):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def emit_plot(series: Sequence[Tuple[float, int]], fit: Optional[PackingFit] = None,
              title: str = "packing counts") -> str:
    """Scatter of (l, log2 count) with the line log2 C + N l; the legend shows the slope."""
    if len(series) < 2:
        raise PreconditionError(f"a scaling plot needs at least 2 points, got {len(series)}")
    ls = np.array([p[0] for p in series], dtype=float)
    counts = np.array([p[1] for p in series], dtype=float)
    fit = fit or packing_exponent_fit(ls, counts)

    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(ls, np.log2(counts), "o", color="tab:blue", label="log2 count")
    grid = np.linspace(ls.min(), ls.max(), 2)
    ax.plot(grid, np.log2(fit.constant) + fit.exponent * grid, "-", color="tab:red",
            label=f"N̂≈{fit.exponent:.1f}, Ĉ≈{fit.constant:.3g}")
    ax.set_xlabel("l  (r = 2^-l)")
    ax.set_ylabel("log2 count")
    ax.set_title(title)
    ax.legend(loc="upper left")
    return _render(fig)


def emit_ratio_plot(l_values: Sequence[float], ratios: Sequence[float], slope: Optional[float] = None,
                    title: str = "doubling ratios") -> str:
    if len(l_values) != len(ratios) or len(l_values) < 1:
        raise PreconditionError("ratio plot needs matching, non-empty l values and ratios")
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    label = "max ratio" if slope is None else f"max ratio (trend {slope:.3f} per l)"
    ax.plot(l_values, ratios, "o-", color="tab:green", label=label)
    ax.set_xlabel("l  (r = 2^-l)")
    ax.set_ylabel("mu(B(x, 2r)) / mu(B(x, r))")
    ax.set_title(title)
    ax.legend(loc="upper left")
    return _render(fig)


def write_svg(svg: str, path: str):
    ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(svg)
