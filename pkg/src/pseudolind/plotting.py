"""Static figures rendered next to the CSV output (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_population(path: Path, t, curves: dict[str, np.ndarray], bands: dict[str, np.ndarray] | None = None) -> Path:
    """Ground-manifold population versus time; ``bands`` holds standard errors keyed like ``curves``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in curves.items():
        (line,) = ax.plot(t, y, label=label)
        if bands and label in bands:
            ax.fill_between(t, y - bands[label], y + bands[label], color=line.get_color(), alpha=0.25, lw=0)
    ax.set_xlabel("Jt")
    ax.set_ylabel("$p_0$")
    ax.legend(loc="best", frameon=False)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_sign_fraction(path: Path, t, fraction) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t, fraction)
    ax.set_xlabel("Jt")
    ax.set_ylabel("negative-sign fraction")
    ax.set_ylim(0, 0.55)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_convergence(path: Path, sizes, errors) -> Path:
    sizes = np.asarray(sizes, dtype=float)
    errors = np.asarray(errors, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(sizes, errors, "o-", label="time-averaged error")
    ref = errors[0] * np.sqrt(sizes[0] / sizes)
    ax.loglog(sizes, ref, "k--", lw=1, label="$N^{-1/2}$")
    ax.set_xlabel("N")
    ax.set_ylabel("relative error")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3, which="both")
    return _finish(fig, path)


def plot_rates(path: Path, rates: np.ndarray) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(rates, cmap="viridis")
    ax.set_xlabel("from q")
    ax.set_ylabel("to k")
    fig.colorbar(im, ax=ax)
    return _finish(fig, path)
