"""Figures written next to the CSV artifacts (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# No software/date stamps, so reruns give identical files.
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def plot_strategy_cdfs(strategy, path, points: int = 201) -> Path:
    """Per-state penalty CDFs on their supports, with the cap marked."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i in range(1, strategy.n + 1):
        xs, ys = strategy.cdf_table(i, points)
        ax.plot(xs, ys, lw=1.5, label=f"state {i}")
    ax.axvline(strategy.config.v, color="0.5", ls=":", lw=1, label="cap v")
    ax.set_xlabel("penalty")
    ax.set_ylabel("P(quoted penalty <= x)")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_efficiency_sweep(rows, path, label: str = "m") -> Path:
    """Efficiency against the swept parameter; failed rows are skipped."""
    x = np.array([r["m_or_r"] for r in rows], dtype=float)
    eta = np.array([r["eta"] for r in rows], dtype=float)
    good = np.isfinite(eta)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(x[good], eta[good], "o-", ms=4, lw=1.2)
    ax.set_xlabel(label)
    ax.set_ylabel("efficiency R_NE / R_OPT")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)
