"""PNG figures for ``nvpl run --plot`` and ``nvpl sweep --plot``.

matplotlib is optional; it is imported only when a figure is requested.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("plotting needs matplotlib (pip install matplotlib)") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_run(times, states, bloch_plus, bloch_minus, path: str | Path, title: str = "") -> Path:
    """Populations and both Bloch vectors against time (in microseconds)."""
    plt = _pyplot()
    t_us = np.asarray(times) * 1e6
    pops = np.abs(np.asarray(states)) ** 2
    fig, axes = plt.subplots(3, 1, figsize=(7, 7.5), sharex=True)
    for k, name in enumerate(("+1", "0", "-1")):
        axes[0].plot(t_us, pops[:, k], label=f"m_S={name}")
    axes[0].set_ylabel("population")
    axes[0].legend(loc="upper right", fontsize="small")
    for ax, bloch, name in ((axes[1], bloch_plus, "{0,+1}"), (axes[2], bloch_minus, "{0,-1}")):
        for k, comp in enumerate("xyz"):
            ax.plot(t_us, np.asarray(bloch)[:, k], label=comp)
        ax.set_ylabel(f"Bloch {name}")
        ax.set_ylim(-1.05, 1.05)
        ax.legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("t (us)")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sweep(table: dict, parameter: str, path: str | Path, series: str | None = None, title: str = "") -> Path:
    """Bright-state population and the geometric phase across a sweep.

    ``table`` maps column names to arrays, as written to the sweep CSV.
    """
    plt = _pyplot()
    x = np.asarray(table[parameter], dtype=float)
    groups = np.asarray(table[series]) if series else np.zeros_like(x)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for g in dict.fromkeys(groups.tolist()):
        sel = groups == g
        label = f"{series}={g:g}" if series else None
        top.plot(x[sel], np.asarray(table["population0"])[sel], ".-", label=label)
        bottom.plot(x[sel], np.asarray(table["phi_aa"])[sel], ".-", label=label)
    top.set_ylabel("population m_S=0")
    bottom.set_ylabel("phi_AA (rad)")
    bottom.set_xlabel(parameter)
    if series:
        top.legend(fontsize="small")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
