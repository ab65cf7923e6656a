"""Figures written next to the CSV outputs.

Uses the object-oriented matplotlib API with the Agg canvas so nothing here
touches pyplot state or needs a display.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
}


def _figure(ncols=1, width=6.0, height=3.2):
    import matplotlib

    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(width, height), layout="constrained")
        axes = fig.subplots(1, ncols, squeeze=False)[0]
    return fig, axes


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, metadata={"Software": None})
    return path


def plot_snapshots(path, frames, title: str = "", xlabel: str = "x / (U + sqrt(gH))") -> Path:
    """Height and velocity at several times against the rescaled coordinate.

    ``frames`` is a list of dicts with keys ``t``, ``x_scaled``, ``h``, ``u``
    and optional ``h_exact``, ``u_exact``.
    """
    fig, (ax_h, ax_u) = _figure(ncols=2, width=8.0)
    for i, fr in enumerate(frames):
        color = f"C{i % 10}"
        label = f"t = {fr['t']:.3g}"
        ax_h.plot(fr["x_scaled"], fr["h"], color=color, label=label)
        ax_u.plot(fr["x_scaled"], fr["u"], color=color, label=label)
        if fr.get("h_exact") is not None:
            ax_h.plot(fr["x_scaled"], fr["h_exact"], color="k", ls=":", lw=0.9)
            ax_u.plot(fr["x_scaled"], fr["u_exact"], color="k", ls=":", lw=0.9)
    ax_h.set_ylabel("h")
    ax_u.set_ylabel("u")
    for ax in (ax_h, ax_u):
        ax.set_xlabel(xlabel)
        ax.grid(alpha=0.3)
    ax_h.legend(loc="best")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_energy(path, t, energy, title: str = "") -> Path:
    fig, (ax,) = _figure()
    t = np.asarray(t)
    energy = np.asarray(energy)
    ax.plot(t, energy, color="C0")
    if energy.size and np.all(energy > 0):
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\|q\|^2_{WP}$")
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_convergence(path, tables: dict, title: str = "") -> Path:
    """Log-log error curves; ``tables`` maps a label to a list of convergence rows."""
    fig, (ax,) = _figure(width=5.0, height=4.0)
    for i, (label, rows) in enumerate(tables.items()):
        N = np.array([r.N for r in rows], dtype=float)
        dx = 1.0 / N
        ax.loglog(dx, [r.h_error for r in rows], marker="s", color=f"C{i}", label=f"h, {label}")
        ax.loglog(dx, [r.u_error for r in rows], marker="o", ls="--", color=f"C{i}", label=f"u, {label}")
        if i == 0 and len(N) > 1:
            ref = rows[-1].h_error * (dx / dx[-1]) ** 2
            ax.loglog(dx, ref, color="0.6", lw=0.8, label="slope 2")
            ref1 = rows[-1].h_error * (dx / dx[-1])
            ax.loglog(dx, ref1, color="0.6", lw=0.8, ls=":", label="slope 1")
    ax.invert_xaxis()
    ax.set_xlabel(r"$\Delta x / L$")
    ax.set_ylabel("L2 error")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=6)
    if title:
        ax.set_title(title)
    return _save(fig, path)
