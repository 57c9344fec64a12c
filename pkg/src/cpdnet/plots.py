"""Matplotlib figure rendering for the CLI report paths.

All functions write PNG files next to the delimited output; none open a
display (the Agg backend is forced so headless runs work).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_voltage_profile(path: str, node_labels, points, certificate=None) -> None:
    """Per-node voltages of each operating point, with the certified floor."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    idx = np.arange(len(node_labels))
    for rank, op in enumerate(points):
        ax.plot(idx, op.v, marker="o", label=f"solution {rank + 1} (V0={op.v0:.1f} V)")
    if certificate is not None and certificate.applicable:
        floor = certificate.v_min * (1.0 - certificate.x_max)
        ax.axhline(floor, color="tab:red", linestyle="--", lw=1,
                   label=f"certified nodal floor {floor:.1f} V")
        ax.axhline(certificate.v_min, color="tab:gray", linestyle=":", lw=1,
                   label=f"certified mean floor {certificate.v_min:.1f} V")
    ax.set_xticks(idx)
    ax.set_xticklabels(node_labels)
    ax.set_xlabel("node")
    ax.set_ylabel("voltage [V]")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_region_figure(path: str, rings, points) -> None:
    """3D view of the certified region of a three-port circuit.

    ``rings`` are (level, vertices[7, 3]) pairs from region_rings;
    operating points are overlaid as markers.
    """
    fig = plt.figure(figsize=(6.5, 6))
    ax = fig.add_subplot(projection="3d")
    for level, ring in rings:
        ax.plot(ring[:, 0], ring[:, 1], ring[:, 2], color="tab:blue", lw=1.2,
                alpha=0.8)
    if len(rings) >= 2:
        first, last = rings[0][1], rings[-1][1]
        for k in range(6):
            ax.plot(
                [first[k, 0], last[k, 0]],
                [first[k, 1], last[k, 1]],
                [first[k, 2], last[k, 2]],
                color="tab:blue", lw=0.6, alpha=0.5,
            )
    for op in points:
        ax.scatter(*op.v, color="tab:red", s=40, depthshade=False)
    ax.set_xlabel("V1 [V]")
    ax.set_ylabel("V2 [V]")
    ax.set_zlabel("V3 [V]")
    ax.set_title("certified operating region and solutions")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figures(out_dir: str, report) -> list[str]:
    """Histogram of voltage tightness and eigenratio scatter; returns paths."""
    import os

    written = []
    tightness = [r.tightness_v0 for r in report.rows if r.tightness_v0 is not None]
    if tightness:
        fig, ax = plt.subplots(figsize=(6.5, 4))
        ax.hist(tightness, bins=40, color="tab:blue", alpha=0.8)
        ax.axvline(1.0, color="tab:red", linestyle="--", lw=1, label="certified bound")
        ax.set_xlabel("mean voltage / certified minimum")
        ax.set_ylabel("instances")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        hist_path = os.path.join(out_dir, "tightness_hist.png")
        fig.savefig(hist_path, dpi=150)
        plt.close(fig)
        written.append(hist_path)

    paired = [
        (r.eigenratio, r.tightness_v0) for r in report.rows if r.tightness_v0 is not None
    ]
    if paired:
        fig, ax = plt.subplots(figsize=(6.5, 4))
        ax.scatter([p[0] for p in paired], [p[1] for p in paired], s=10, alpha=0.6)
        ax.set_xlabel("eigenratio (heterogeneity)")
        ax.set_ylabel("mean voltage / certified minimum")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        scatter_path = os.path.join(out_dir, "eigenratio_vs_tightness.png")
        fig.savefig(scatter_path, dpi=150)
        plt.close(fig)
        written.append(scatter_path)
    return written
