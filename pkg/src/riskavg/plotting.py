"""Line-plot figures for experiment panels, written as static SVG."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "svg.hashsalt": "riskavg",   # stable element ids, so reruns give identical files
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.frameon": False,
}
_DASHES = ["-", "--", "-.", ":", (0, (5, 1, 1, 1, 1, 1))]
_MARKERS = ["o", "s", "^", "D", "v", "x"]


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    band: np.ndarray | None = None    # optional half-width, drawn as a shaded region
    hline: bool = False               # draw as a horizontal reference level


@dataclass
class Panel:
    name: str
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)


def render_panel(panel: Panel, path: str | Path) -> Path:
    """Draw one panel and save it as SVG 1.1."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for i, s in enumerate(panel.series):
            x = np.asarray(s.x, float)
            y = np.asarray(s.y, float)
            if s.hline:
                ax.axhline(float(y.ravel()[0]), color="0.4", lw=0.9, ls=":", label=s.label)
                continue
            style = _DASHES[i % len(_DASHES)]
            line, = ax.plot(x, y, ls=style, marker=_MARKERS[i % len(_MARKERS)], ms=3, label=s.label)
            if s.band is not None:
                b = np.asarray(s.band, float)
                ok = np.isfinite(y) & np.isfinite(b)
                ax.fill_between(x[ok], (y - b)[ok], (y + b)[ok], color=line.get_color(), alpha=0.15,
                                lw=0)
        ax.set_title(panel.title)
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
