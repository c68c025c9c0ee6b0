"""Matplotlib rendering of the evaluation report figures.

Renders the two report figures to PNG next to the plot-data text files:
localization error per photo index, and computed coordinates overlaid on
the ground-truth track.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from wildloc.evalkit import EvalSummary  # noqa: E402
from wildloc.localizer import LocalizationResult, PhotoMeta  # noqa: E402

_PNG_META = {"Software": None}  # keep output bytes reproducible


def render_report_figures(
    summary: EvalSummary,
    results: Sequence[LocalizationResult],
    truth: Mapping[str, PhotoMeta],
    out_dir,
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "error_fig": out / "error_plot.png",
        "coords_fig": out / "coords_plot.png",
    }

    indices = [i for i, (_, e) in enumerate(summary.errors) if e is not None]
    errs = [e for _, e in summary.errors if e is not None]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(indices, errs, marker="o", markersize=3, linewidth=1, color="#c44e52")
    ax.axhline(summary.success_threshold_m, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xlabel("Photograph index")
    ax.set_ylabel("Localization error [m]")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(paths["error_fig"], dpi=120, metadata=_PNG_META)
    plt.close(fig)

    comp_lat, comp_lon, true_lat, true_lon = [], [], [], []
    for r in results:
        if r.localized and r.position is not None:
            t = truth[r.photo].truth
            comp_lat.append(r.position.lat)
            comp_lon.append(r.position.lon)
            true_lat.append(t.lat)
            true_lon.append(t.lon)

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(true_lat, true_lon, marker="o", markersize=3, linewidth=1,
            color="#c44e52", label="ground truth")
    ax.plot(comp_lat, comp_lon, marker="o", markersize=3, linewidth=1,
            color="#4c72b0", label="computed")
    ax.set_xlabel("Latitude (deg)")
    ax.set_ylabel("Longitude (deg)")
    ax.legend()
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(paths["coords_fig"], dpi=120, metadata=_PNG_META)
    plt.close(fig)

    return paths
