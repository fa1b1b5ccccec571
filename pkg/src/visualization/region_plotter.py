#!/usr/bin/env python3
"""
Offline plot of the nested rate regions written by `macwt_runner.py region`.
Usage:
    python src/visualization/region_plotter.py results/region_vertices.csv results/regions.png
"""

import argparse
import logging
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from utility.exporter import read_csv  # noqa: E402

logger = logging.getLogger(__name__)

# drawn back to front so the secrecy region sits inside the MAC region
REGION_STYLES = {
    "mac_hull": {"facecolor": "#dddddd", "edgecolor": "#999999", "label": "MAC (swept hull)"},
    "mac": {"facecolor": "#9ecae1", "edgecolor": "#3182bd", "label": "MAC, no secrecy"},
    "secrecy_hull": {"facecolor": "#fdd0a2", "edgecolor": "#e6550d",
                     "label": "Secrecy (swept hull)"},
    "secrecy": {"facecolor": "#fc9272", "edgecolor": "#de2d26", "label": "With secrecy"},
}


def plot_regions(vertex_csv, output_path, title: str = "Achievable rate regions"):
    """
    Render every region kind in the vertex CSV as a filled polygon.

    Args:
        vertex_csv: file with columns region_kind, vertex, r1, r2.
        output_path: image file to write; the format follows the suffix.
        title: figure title.

    Returns:
        The matplotlib figure.
    """
    frame = read_csv(vertex_csv)
    fig, ax = plt.subplots(figsize=(6, 6))
    upper = 0.0
    for kind, style in REGION_STYLES.items():
        points = frame[frame["region_kind"] == kind].sort_values("vertex")[["r1", "r2"]]
        if points.empty:
            continue
        upper = max(upper, float(points.values.max()))
        ax.add_patch(Polygon(points.values, closed=True, alpha=0.7, linewidth=1.5, **style))
    limit = upper * 1.1 if upper > 0 else 1.0
    ax.set_xlim(0, limit)
    ax.set_ylim(0, limit)
    ax.set_xlabel("R1 (bits per channel use)")
    ax.set_ylabel("R2 (bits per channel use)")
    ax.set_title(title)
    ax.legend(loc="upper right")
    ax.set_aspect("equal")
    fig.savefig(output_path, dpi=150, bbox_inches="tight")
    logger.debug("saved region plot to %s", output_path)
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description='Plot rate regions from a vertex CSV')
    parser.add_argument('vertex_csv', help='region_vertices.csv written by the region command')
    parser.add_argument('output', help='Image file to write (e.g. regions.png)')
    parser.add_argument('--title', default='Achievable rate regions', help='Figure title')
    args = parser.parse_args(argv)

    fig = plot_regions(args.vertex_csv, args.output, args.title)
    plt.close(fig)
    print(f"Plot saved to: {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
