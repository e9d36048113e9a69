"""Static SVG figures.

Figures are drawn with the Agg backend and written with a fixed hash salt and
no date, so the same data always gives the same file.
"""
from __future__ import annotations

import logging
import os
from collections.abc import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from fvdp_analyser.chaos import Quadrilateral  # noqa: E402
from fvdp_analyser.slowflow import FoldedEquilibrium  # noqa: E402

_RC = {
    "svg.hashsalt": "fvdp-analyser",
    "svg.fonttype": "path",
    "path.simplify": False,
}
_FIGSIZE = (6.4, 4.8)


def _save(fig: plt.Figure, path: str | os.PathLike[str]) -> None:
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logging.debug("Wrote %s", path)


def plot_trajectory(
    samples: pd.DataFrame, events: pd.DataFrame, path: str | os.PathLike[str]
) -> None:
    """A trajectory in (theta, y, x) with its events marked."""
    with plt.rc_context(_RC):
        fig = plt.figure(figsize=_FIGSIZE)
        ax = fig.add_subplot(projection="3d")
        ax.plot(samples["theta"], samples["y"], samples["x"], linewidth=0.6, color="black")
        for label, group in events.groupby("label", sort=True):
            ax.scatter(group["theta"], group["y"], group["x"], s=8, label=str(label))
        ax.set_xlabel("theta")
        ax.set_ylabel("y")
        ax.set_zlabel("x")
        ax.view_init(elev=20.0, azim=-60.0)
        if len(events):
            ax.legend(loc="upper left", fontsize="small")
    _save(fig, path)


def plot_slow_flow(
    portrait: pd.DataFrame,
    equilibria: Sequence[FoldedEquilibrium],
    path: str | os.PathLike[str],
) -> None:
    """Desingularized flow trajectories in (theta, x) with folds and folded equilibria."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        for _, group in portrait.groupby("seed", sort=True):
            ax.plot(group["theta"], group["x"], ".", markersize=1, color="tab:blue")
        for x in (-1.0, 1.0):
            ax.axhline(x, color="grey", linewidth=0.8, linestyle="--")
        for eq in equilibria:
            marker = "x" if eq.kind == "saddle" else "o"
            ax.plot([eq.theta], [eq.x], marker, color="tab:red", label=eq.kind)
        ax.set_xlim(0.0, 1.0)
        ax.set_xlabel("theta")
        ax.set_ylabel("x")
    _save(fig, path)


def plot_edge_images(
    q: Quadrilateral, images: pd.DataFrame, path: str | os.PathLike[str]
) -> None:
    """The quadrilateral and the images of its top and bottom edges."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        outline = np.vstack([q.boundary, q.boundary[:1]])
        ax.plot(outline[:, 0], outline[:, 1], color="black", linewidth=0.8)
        mapped = images[images["error"] == ""]
        for edge, group in mapped.groupby("edge", sort=True):
            ax.plot(group["theta"], group["y"], linewidth=0.8, label=f"image of {edge} edge")
        ax.set_xlabel("theta")
        ax.set_ylabel("y")
        if len(mapped):
            ax.legend(loc="best", fontsize="small")
    _save(fig, path)


def plot_periods(table: pd.DataFrame, path: str | os.PathLike[str]) -> None:
    """|T(eps) - T0| against eps on log axes."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        ax.loglog(table["eps"], table["gap"].abs(), "o-")
        ax.set_xlabel("eps")
        ax.set_ylabel("|T - T0|")
    _save(fig, path)


def plot_sweep(table: pd.DataFrame, path: str | os.PathLike[str]) -> None:
    """Subharmonic number over the (a, omega) grid; cells without one are grey."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        periodic = table[table["status"] == "periodic"]
        other = table[table["status"] != "periodic"]
        ax.scatter(other["a"], other["omega"], s=6, color="lightgrey")
        if len(periodic):
            points = ax.scatter(
                periodic["a"], periodic["omega"], s=10, c=periodic["n_sub"], cmap="viridis"
            )
            fig.colorbar(points, ax=ax, label="subharmonic")
        coexisting = table[table["coexisting"]]
        ax.scatter(coexisting["a"], coexisting["omega"], s=20, facecolors="none", edgecolors="red")
        ax.set_xlabel("a")
        ax.set_ylabel("omega")
    _save(fig, path)


def plot_iterates(iterates: pd.DataFrame, path: str | os.PathLike[str]) -> None:
    """Return map iterates in (theta, y)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        ax.plot(iterates["theta"], iterates["y"], ".", markersize=3)
        ax.set_xlim(0.0, 1.0)
        ax.set_xlabel("theta")
        ax.set_ylabel("y")
    _save(fig, path)


def plot_divergence(separation: pd.DataFrame, path: str | os.PathLike[str]) -> None:
    """Separation of two trajectories against time."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        positive = separation[separation["separation"] > 0]
        if len(positive):
            ax.semilogy(positive["t"], positive["separation"], linewidth=0.8)
        ax.axhline(1.0, color="grey", linewidth=0.8, linestyle="--")
        ax.set_xlabel("t")
        ax.set_ylabel("separation")
    _save(fig, path)
