"""Tour and convergence figures written straight to files."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_tour(inst, tour, path, title: str | None = None) -> Path:
    """Draw the closed tour; viewport is the bounding square of the points."""
    xy = inst.coords[np.append(tour.order, tour.order[0])]
    fig, ax = plt.subplots(figsize=(6, 6))
    lw = 0.8 if inst.n <= 2000 else 0.3
    ax.plot(xy[:, 0], xy[:, 1], "-", lw=lw, color="tab:blue")
    if inst.n <= 2000:
        ax.plot(inst.xs, inst.ys, ".", ms=2, color="k")
    lo = inst.coords.min(axis=0)
    side = float((inst.coords.max(axis=0) - lo).max()) or 1.0
    ax.set_xlim(lo[0], lo[0] + side)
    ax.set_ylim(lo[1], lo[1] + side)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title(title or f"{inst.name or 'tour'}  n={inst.n}  cost={tour.cost}", fontsize=9)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_convergence(records, path, reference=None) -> Path:
    """Best cost against wall time, one line per run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in records:
        if not r.trajectory:
            continue
        t, c = zip(*r.trajectory)
        t = list(t) + [r.seconds]
        c = list(c) + [c[-1]]
        ax.step(t, c, where="post", lw=1, label=f"{r.mode} seed {r.seed}")
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", lw=0.8, label="reference")
    ax.set_xlabel("seconds")
    ax.set_ylabel("best tour cost")
    if len(records) <= 12:
        ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
