"""Render per-slice plot data to PNG files.

Each plot-data series written by the report stage has a matching figure:
binned volume-vs-partners curves with their fitted line, degree
densities with the fitted tail model, and mean-variance scatters with
the fitted slope.  Rendering is headless and deterministic; rerunning
produces byte-identical images.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first
import numpy as np  # noqa: E402

FIGSIZE = (6.0, 4.5)
DPI = 110


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _render_scaling(series, ax) -> None:
    x, y = (np.array(col, dtype=float) for col in zip(*series.rows))
    ax.loglog(x, y, "o", color="#1f6fb4", label="binned mean")
    alpha = series.meta["alpha"]
    intercept = series.meta["intercept"]
    grid = np.geomspace(x.min(), x.max(), 64)
    ax.loglog(grid, 10.0 ** intercept * grid ** alpha, "-", color="#d1495b",
              label=f"slope {alpha:.3f}")
    ax.set_xlabel("distinct partners N")
    ax.set_ylabel("mean trades V")
    ax.legend()


def _render_tail(series, ax) -> None:
    x, density, modeled = (np.array(col, dtype=float) for col in zip(*series.rows))
    ax.loglog(x, density, "o", color="#1f6fb4", label="data")
    shown = modeled > 0
    if shown.any():
        ax.loglog(x[shown], modeled[shown], "-", color="#d1495b",
                  label=f"gamma {series.meta['gamma']:.3f}")
    ax.set_xlabel("per-account trades")
    ax.set_ylabel("density")
    ax.legend()


def _render_taylor(series, ax) -> None:
    x, y = (np.array(col, dtype=float) for col in zip(*series.rows))
    ax.plot(x, y, ".", color="#1f6fb4", markersize=4, alpha=0.6, label="accounts")
    b = series.meta["b"]
    log_a = series.meta["log_a"]
    grid = np.linspace(x.min(), x.max(), 64)
    ax.plot(grid, log_a + b * grid, "-", color="#d1495b", label=f"slope {b:.3f}")
    ax.set_xlabel("log10 hourly mean")
    ax.set_ylabel("log10 hourly variance")
    ax.legend()


_RENDERERS = {
    "scaling": _render_scaling,
    "tail": _render_tail,
    "taylor": _render_taylor,
}


def render_series(series, path) -> None:
    """Write the figure for one plot-data series to ``path``."""
    renderer = _RENDERERS.get(series.kind)
    if renderer is None:
        raise ValueError(f"no renderer for series kind {series.kind!r}")
    title = f"{series.category} period {series.period} ({series.role})"
    fig, ax = _new_axes(title)
    try:
        renderer(series, ax)
        fig.tight_layout()
        fig.savefig(path, dpi=DPI, format="png")
    finally:
        plt.close(fig)


__all__ = ["render_series", "FIGSIZE", "DPI"]
