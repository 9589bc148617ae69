"""Relevance-curve rendering for exported profiles.

Draws per-segment scores as steps over a time axis, optionally overlaying
a second profile for before/after expert-set comparison and a spectrogram
underlay, annotating each local peak with its top expert.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .features import MelSpectrogram


def plot_profiles(profiles: list[dict], labels: list[str] | None = None,
                  spectrogram: MelSpectrogram | None = None,
                  title: str | None = None, out_path: str | Path = "relevance.svg"
                  ) -> Path:
    """Render one or two relevance profiles (as read by read_profile) to
    SVG or PNG, chosen by the output suffix."""
    fig, ax = plt.subplots(figsize=(10, 4))
    if spectrogram is not None:
        extent = (0.0, spectrogram.frames * spectrogram.frame_hop_seconds,
                  0.0, 1.0)
        ax.imshow(spectrogram.values, aspect="auto", origin="lower", cmap="gray_r",
                  alpha=0.35, extent=extent)
    colors = ["black", "lightgray", "tab:blue"]
    for i, profile in enumerate(profiles):
        label = labels[i] if labels and i < len(labels) else f"profile {i + 1}"
        ax.step(profile["start_seconds"], profile["r_max"], where="post",
                color=colors[i % len(colors)], label=label, linewidth=1.6)
        _annotate_peaks(ax, profile, colors[i % len(colors)])
    ax.set_xlabel("time (s)")
    ax.set_ylabel("weighted relevance")
    ax.set_ylim(-0.02, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    out_path = Path(out_path)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def _annotate_peaks(ax, profile: dict, color: str, max_labels: int = 6) -> None:
    r = np.asarray(profile["r_max"])
    if r.size == 0:
        return
    peaks = [k for k in range(r.size)
             if (k == 0 or r[k] >= r[k - 1]) and (k == r.size - 1 or r[k] > r[k + 1])]
    peaks.sort(key=lambda k: -r[k])
    for k in peaks[:max_labels]:
        if r[k] <= 0.05:
            continue
        ax.annotate(profile["top_expert"][k],
                    (profile["start_seconds"][k], r[k]),
                    textcoords="offset points", xytext=(2, 4),
                    fontsize=7, color=color)
