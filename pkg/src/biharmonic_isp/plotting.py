"""PNG figures for reconstructions and radial profiles (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .indicators import IndicatorField  # noqa: E402
from .radon import JumpReport, RadialProfile  # noqa: E402

__all__ = ["plot_field", "plot_comparison", "plot_profile"]

_TITLES = {"boundary": "boundary indicator", "source1": "source indicator (u only)",
           "source2": "source indicator (u and Laplacian)", "truth": "true source",
           "difference": "normalised difference"}


def _imshow(ax, field: IndicatorField, cmap="viridis"):
    a, b, c, d = field.grid.domain
    im = ax.imshow(field.values.T, origin="lower", extent=(a, b, c, d), cmap=cmap, interpolation="nearest")
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    ax.set_aspect("equal")
    ax.set_title(_TITLES.get(field.kind, field.kind), fontsize=10)
    return im


def plot_field(field: IndicatorField, path, sensors: np.ndarray | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(4.6, 4.0), constrained_layout=True)
    im = _imshow(ax, field)
    if sensors is not None:
        a, b, c, d = field.grid.domain
        inside = [(x, y) for x, y in sensors if a <= x <= b and c <= y <= d]
        if inside:
            ax.plot(*np.array(inside).T, "r^", ms=4)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_comparison(truth: IndicatorField, recon: IndicatorField, diff: IndicatorField, path) -> Path:
    """Truth, reconstruction and normalised difference side by side."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.8), constrained_layout=True)
    for ax, f, cmap in zip(axes, (truth, recon, diff), ("viridis", "viridis", "coolwarm")):
        fig.colorbar(_imshow(ax, f, cmap), ax=ax, shrink=0.8)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def plot_profile(profile: RadialProfile, derivative: RadialProfile, path,
                 exact: np.ndarray | None = None, report: JumpReport | None = None) -> Path:
    fig, (top, bot) = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True, constrained_layout=True)
    r = profile.r
    top.plot(r, profile.values, lw=1.2, label="from data")
    if exact is not None:
        top.plot(r, exact, "k--", lw=0.9, label="exact")
    top.set_ylabel("$I_x(r)$")
    top.legend(frameon=False, fontsize=8)
    bot.plot(r, derivative.values, lw=1.0, color="C1")
    bot.set_ylabel("$I_x'(r)$")
    bot.set_xlabel("$r$")
    if report is not None:
        for j in report.jumps:
            for ax in (top, bot):
                ax.axvline(j.r0, color="0.6", lw=0.7, ls=":")
            bot.annotate(j.kind, (j.r0, bot.get_ylim()[1]), fontsize=6, rotation=90, va="top", ha="right")
    top.set_title(f"sensor ({profile.sensor[0]:.3g}, {profile.sensor[1]:.3g})", fontsize=10)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
