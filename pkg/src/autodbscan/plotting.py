"""Deterministic SVG scatter plots of a labelling.

Each cluster is drawn as one marker group with SVG id ``cluster-<k>``; noise
points share a grey ``x`` marker under id ``noise``. Output bytes are stable
for fixed inputs: the SVG hash salt and the date metadata are pinned.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.lines import Line2D  # noqa: E402

import numpy as np  # noqa: E402

from .dbscan import Labeling  # noqa: E402
from .geometry import NOISE, Dataset, DimensionError  # noqa: E402

NOISE_COLOR = "#808080"
_RC = {"svg.hashsalt": "autodbscan", "svg.fonttype": "none", "path.simplify": False}


def cluster_color(k: int) -> str:
    cmap = matplotlib.colormaps["tab10" if k < 10 else "tab20"]
    r, g, b, _ = cmap(k % cmap.N)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def render_svg(data: Dataset, labeling: Labeling, dims: Sequence[int] = (0, 1),
               title: str = "") -> str:
    """SVG document text for a scatter of columns ``dims`` coloured by cluster."""
    if len(dims) != 2:
        raise ValueError("plot dims must be a pair of column indices")
    i, j = (int(d) for d in dims)
    for d in (i, j):
        if not 0 <= d < data.dim:
            raise DimensionError(f"plot column {d} out of range for {data.dim}-dimensional data")
    if len(labeling) != data.n:
        raise ValueError("labeling and dataset sizes differ")

    fig = Figure(figsize=(6.0, 5.0))
    ax = fig.add_subplot()
    X = data.coords
    label = np.asarray(labeling.label)
    handles = []
    for k in range(labeling.cluster_count):
        sel = label == k
        color = cluster_color(k)
        ax.scatter(X[sel, i], X[sel, j], s=14, c=color, marker="o", linewidths=0,
                   gid=f"cluster-{k}")
        handles.append(Line2D([], [], color=color, marker="o", linestyle="", label=f"cluster {k}"))
    sel = label == NOISE
    if sel.any():
        ax.scatter(X[sel, i], X[sel, j], s=14, c=NOISE_COLOR, marker="x", linewidths=0.8,
                   gid="noise")
        handles.append(Line2D([], [], color=NOISE_COLOR, marker="x", linestyle="", label="noise"))
    ax.set_xlabel(f"column {i}")
    ax.set_ylabel(f"column {j}")
    if title:
        ax.set_title(title)
    legend = ax.legend(handles=handles, loc="best", fontsize="small", title="clusters")
    legend.set_gid("legend")

    buf = io.StringIO()
    with rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def write_svg(data: Dataset, labeling: Labeling, dims: Sequence[int],
              path: Union[str, Path], title: str = "") -> None:
    text = render_svg(data, labeling, dims, title)
    Path(path).write_text(text, encoding="utf-8")
