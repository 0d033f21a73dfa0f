"""
visualization.py: 2-D scatter export as CSV, SVG and PNG.
"""
import logging
import os
import xml.etree.ElementTree as ET
from typing import Dict, Optional

import numpy as np
import pandas as pd
from matplotlib import colormaps
from matplotlib.colors import to_hex
from matplotlib.figure import Figure

from ..embedding import Embedding
from ..exceptions import ConfigError

log = logging.getLogger(__name__)

MAX_POINTS = 5000
CANVAS = 600
MARGIN = 20
RADIUS = 1.5
SVG_NS = "http://www.w3.org/2000/svg"


def label_colors(labels: np.ndarray) -> Dict[int, str]:
    classes = np.unique(labels)
    cmap = colormaps["tab10"] if classes.size <= 10 else colormaps["tab20"]
    if classes.size > 20:
        cmap = colormaps["hsv"].resampled(classes.size + 1)
    return {int(label): to_hex(cmap(i)) for i, label in enumerate(classes)}


def subsample(n: int, max_points: int, seed: int) -> np.ndarray:
    """Sorted indices of a uniform sample without replacement."""
    if n <= max_points:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=max_points, replace=False))


def _write_svg(path: str, xy: np.ndarray, labels: np.ndarray, colors: Dict[int, str]) -> None:
    ET.register_namespace("", SVG_NS)
    width = CANVAS + 120
    root = ET.Element(
        f"{{{SVG_NS}}}svg",
        {"width": str(width), "height": str(CANVAS), "viewBox": f"0 0 {width} {CANVAS}"},
    )
    ET.SubElement(root, f"{{{SVG_NS}}}rect", {"width": "100%", "height": "100%", "fill": "white"})
    lo = xy.min(axis=0)
    span = np.where(np.ptp(xy, axis=0) > 0, np.ptp(xy, axis=0), 1.0)
    scaled = MARGIN + (xy - lo) / span * (CANVAS - 2 * MARGIN)
    points = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": "points"})
    for (x, y), label in zip(scaled, labels):
        ET.SubElement(
            points,
            f"{{{SVG_NS}}}circle",
            # svg y grows downwards
            {"cx": f"{x:.2f}", "cy": f"{CANVAS - y:.2f}", "r": str(RADIUS), "fill": colors[int(label)]},
        )
    legend = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": "legend"})
    for row, (label, color) in enumerate(colors.items()):
        top = MARGIN + 18 * row
        ET.SubElement(
            legend, f"{{{SVG_NS}}}rect",
            {"x": str(CANVAS + 10), "y": str(top), "width": "10", "height": "10", "fill": color},
        )
        text = ET.SubElement(
            legend, f"{{{SVG_NS}}}text",
            {"x": str(CANVAS + 26), "y": str(top + 9), "font-size": "11", "font-family": "sans-serif"},
        )
        text.text = str(label)
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)


def _write_png(path: str, xy: np.ndarray, labels: np.ndarray, colors: Dict[int, str]) -> None:
    fig = Figure(figsize=(6, 6))
    ax = fig.subplots()
    for label, color in colors.items():
        mask = labels == label
        ax.scatter(xy[mask, 0], xy[mask, 1], s=2, c=color, label=str(label))
    ax.set_xticks([])
    ax.set_yticks([])
    ax.legend(loc="upper right", markerscale=4, fontsize="small")
    fig.savefig(path, bbox_inches="tight", dpi=150)


def export_visualization(
    emb2d: Embedding,
    labels: Optional[np.ndarray],
    out: str,
    max_points: int = MAX_POINTS,
    seed: int = 0,
) -> Dict[str, str]:
    """Write scatter.csv (x, y, label), scatter.svg and scatter.png into `out`."""
    if emb2d.m != 2:
        log.error(f"Visualization needs a 2-D embedding, got m={emb2d.m}")
        raise ConfigError(f"visualization needs exactly 2 columns, got {emb2d.m}")
    if max_points < 1:
        raise ConfigError(f"max_points must be >= 1, got {max_points}")
    if labels is None:
        labels = np.zeros(emb2d.n, dtype=np.int64)
    labels = np.asarray(labels)
    if labels.shape[0] != emb2d.n:
        raise ConfigError(f"{labels.shape[0]} labels for {emb2d.n} points")

    os.makedirs(out, exist_ok=True)
    keep = subsample(emb2d.n, max_points, seed)
    xy, kept_labels = emb2d.coords[keep], labels[keep]
    colors = label_colors(kept_labels)
    paths = {
        "csv": os.path.join(out, "scatter.csv"),
        "svg": os.path.join(out, "scatter.svg"),
        "png": os.path.join(out, "scatter.png"),
    }
    pd.DataFrame({"x": xy[:, 0], "y": xy[:, 1], "label": kept_labels}).to_csv(
        paths["csv"], index=False, float_format="%.17g"
    )
    _write_svg(paths["svg"], xy, kept_labels, colors)
    _write_png(paths["png"], xy, kept_labels, colors)
    log.info(f"Scatter of {keep.size} of {emb2d.n} points written to {out}")
    return paths
