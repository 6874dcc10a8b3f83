"""PNG figures rendered next to the CSV/JSON outputs (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MAX_CONTOURS = 12
GRID = 241


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_atlas(path, points, atlas, fmap, title="", box=((-1, -1), (1, 1)),
               max_contours=MAX_CONTOURS):
    """Scatter of the cloud with the zero sets of the largest records overlaid.

    With ``atlas=None`` only the points are drawn.
    """
    points = np.asarray(points, float)
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    records = [] if atlas is None else sorted(atlas.records, key=lambda r: (-len(r.members), r.members))[:max_contours]
    labelled = np.zeros(len(points), bool)
    for r in records:
        labelled[list(r.members)] = True
    ax.scatter(*points[~labelled].T, s=6, c="0.6", lw=0, label="unlabelled")
    ax.scatter(*points[labelled].T, s=8, c="k", lw=0, label="labelled")
    if points.shape[1] == 2 and records:
        xs = np.linspace(box[0][0], box[1][0], GRID)
        ys = np.linspace(box[0][1], box[1][1], GRID)
        xx, yy = np.meshgrid(xs, ys)
        grid = np.column_stack([xx.ravel(), yy.ravel()])
        feats = fmap.evaluate(grid)
        colours = plt.get_cmap("tab10")
        for i, r in enumerate(records):
            zz = r.label(feats).reshape(xx.shape)
            ax.contour(xx, yy, zz, levels=[0.0], colors=[colours(i % 10)], linewidths=1.2)
    ax.set_xlim(box[0][0], box[1][0])
    ax.set_ylim(box[0][1], box[1][1])
    ax.set_aspect("equal")
    ax.set_title(title if atlas is None else f"{title}  ({len(atlas)} records)".strip())
    ax.legend(loc="upper right", fontsize=7, frameon=False)
    return _save(fig, path)


def plot_smin(path, rows, t=0.7, gamma=0.3, signal_rows=()):
    """Ratio samples per N with the concentration band around 1.

    ``signal_rows`` are (sigma, N, seed, ratio) tuples for noisy circle data,
    drawn as one mean curve per sigma.
    """
    rows = np.asarray(rows, float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(rows[:, 0], rows[:, 2], s=5, alpha=0.4, c="C0")
    sizes = np.unique(rows[:, 0])
    means = [rows[rows[:, 0] == n, 2].mean() for n in sizes]
    ax.plot(sizes, means, "o-", c="C0", label="background noise")
    sig = np.asarray(signal_rows, float).reshape(-1, 4)
    for k, sigma in enumerate(np.unique(sig[:, 0])):
        sel = sig[sig[:, 0] == sigma]
        ns = np.unique(sel[:, 1])
        ax.plot(ns, [sel[sel[:, 1] == n, 3].mean() for n in ns], "s--", c=f"C{k + 2}",
                label=f"circle, sigma={sigma:g}")
    ns = np.geomspace(sizes.min(), sizes.max(), 100)
    band = t * ns ** (gamma - 0.5)
    ax.fill_between(ns, 1 - band, 1 + band, color="C1", alpha=0.15, label="1 ± tN^(γ-1/2)")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("s_min / sqrt(N)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_delta_f(path, curves):
    """``curves``: mapping name -> list of DeltaF."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, pts in curves.items():
        ns = [d.n for d in pts]
        vals = np.array([d.value for d in pts])
        err = np.array([2 * d.std_error for d in pts])
        ax.errorbar(ns, vals, yerr=err, marker="o", capsize=2, label=name)
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("delta_f")
    ax.legend(frameon=False)
    return _save(fig, path)
