"""Report figures rendered next to the delimited outputs.

All plots are plain matplotlib on the Agg backend; they visualize what the
JSON/CSV already contains and carry no data of their own.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .barrier import BarrierParams, keq_lhs
from .grid import ScalarField

__all__ = ["barrier_figure", "field_figure", "convergence_figure"]


def barrier_figure(params: BarrierParams, L: float, a: float, b: float,
                   K: float, path) -> None:
    """keq left side over (0,1) against the -K line."""
    t = np.linspace(0.0, 1.0, 2002)[1:-1]
    lhs = keq_lhs(params, L, a, b, t)
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(t, lhs, lw=1.2, label=r"$aL^3\omega''\omega'^2+bL^2\omega'^2$")
    ax.axhline(-K, color="crimson", lw=1.0, ls="--", label=f"-K = {-K:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("barrier inequality left side")
    ax.set_title(f"L = {L:g}, kappa = {params.kappa:g}, theta = {params.theta:g}")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def field_figure(u: ScalarField, phases=None, witness=None, path=None,
                 title: str = "") -> None:
    """Solution heatmap (2D) or profile (1D), with phase boundary and witness."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    ax.set_title(title, fontsize=9)
    if u.n == 1:
        x = u.axis_coords()
        ax.plot(x, u.values, lw=1.2)
        ax.axhline(0.0, color="gray", lw=0.6)
        if phases is not None and np.any(phases.fb):
            ax.plot(x[phases.fb], u.values[phases.fb], "r.", ms=5, label="free boundary")
            ax.legend(frameon=False, fontsize=8)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        ext = (-1, 1, -1, 1)
        im = ax.imshow(u.values.T, origin="lower", extent=ext, cmap="RdBu_r",
                       vmin=-np.max(np.abs(u.values)), vmax=np.max(np.abs(u.values)))
        fig.colorbar(im, ax=ax, shrink=0.85)
        if phases is not None and np.any(phases.fb):
            fbpts = np.argwhere(phases.fb) * u.h - 1.0
            ax.plot(fbpts[:, 0], fbpts[:, 1], "k.", ms=1.5)
        if witness is not None:
            ax.plot(*witness.x0, "g^", ms=8, label="x0")
            ax.plot(*witness.y0, "mv", ms=8, label="y0")
            ax.legend(frameon=False, fontsize=8, loc="upper right")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def convergence_figure(rows, path) -> None:
    """log-log sup error and residual versus h."""
    h = np.array([r.h for r in rows])
    err = np.array([r.sup_error for r in rows])
    res = np.array([r.residual for r in rows])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(h, err, "o-", lw=1.2, label="sup error on B_1/2")
    if np.all(res > 0):
        ax.loglog(h, res, "s--", lw=1.0, label="scheme residual")
    ax.loglog(h, err[-1] * (h / h[-1]), ":", color="gray", lw=1.0, label="O(h)")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
