"""Matplotlib figures written next to the CSV/JSON reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed salt and no date stamp, so figure files are reproducible byte for byte
plt.rcParams["svg.hashsalt"] = "horoflow"
plt.rcParams["font.size"] = 9


def _save(fig, path):
    path = str(path)
    meta = {"Date": None} if path.endswith((".svg", ".pdf")) else {}
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def plot_birkhoff(report, path, title: str | None = None):
    """Per-start running averages (left) and cross-start spread (right) against T."""
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    t = np.asarray(report.times)
    for i, row in enumerate(report.averages):
        ax.plot(t, row, marker="o", ms=3, lw=1, label=f"start {i}")
    if report.reference is not None:
        ax.axhline(report.reference, color="k", lw=0.8, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel(f"average of {report.observable}")
    if len(report.averages) <= 8:
        ax.legend(fontsize=6, frameon=False)
    ax2.plot(t, report.spread, marker="s", ms=3, color="k")
    ax2.set_xscale("log")
    if np.all(np.asarray(report.spread) > 0):
        ax2.set_yscale("log")
    ax2.set_xlabel("T")
    ax2.set_ylabel("spread (max - min)")
    fig.suptitle(title or f"{report.space}: {report.flow}")
    _save(fig, path)


def plot_orbit(points, path, boundary=None, title: str | None = None):
    """Reduced base points in the Poincare disk."""
    from .hyperplane import cayley

    w = np.array([cayley(complex(p)) for p in points])
    fig, ax = plt.subplots(figsize=(4, 4))
    circ = np.exp(1j * np.linspace(0, 2 * np.pi, 400))
    ax.plot(circ.real, circ.imag, color="0.3", lw=0.8)
    if boundary is not None:
        b = np.array([cayley(complex(p)) for p in boundary] + [cayley(complex(boundary[0]))])
        ax.plot(b.real, b.imag, color="tab:blue", lw=0.8)
    ax.plot(w.real, w.imag, ".", ms=1, color="tab:red")
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title)
    _save(fig, path)
