"""Static figures for the report subcommands, written with the Agg backend."""
from __future__ import annotations

import os

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    fig.clf()


def histogram_figure(h, path: str) -> str:
    """Observed and predicted standardized (L1, N1) cell counts, side by side."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    e = h.edges
    vmax = max(h.observed.max(), h.expected.max())
    for ax, data, title in ((axes[0], h.observed, "observed"), (axes[1], h.expected, "Gaussian prediction")):
        im = ax.pcolormesh(e, e, data.T, vmin=0, vmax=vmax, cmap="viridis")
        ax.set_title(title)
        ax.set_xlabel("(L1 - rho n) / sigma_n")
        ax.set_ylabel("(N1 - rho* n) / sigma*_n")
        fig.colorbar(im, ax=ax)
    resid = (h.observed - h.expected) / np.sqrt(np.maximum(h.expected, 1e-12))
    lim = float(np.abs(resid).max()) or 1.0
    im = axes[2].pcolormesh(e, e, resid.T, vmin=-lim, vmax=lim, cmap="RdBu_r")
    axes[2].set_title(f"Pearson residuals (p = {h.p_value:.3g})")
    fig.colorbar(im, ax=axes[2])
    _save(fig, path)
    plt.close(fig)
    return path


def sweep_figure(sweep, path: str, column=None) -> str:
    plt = _pyplot()
    column = column or sweep.target_column
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(sweep.rho, sweep.columns[column], "o-", label=column)
    if sweep.target is not None:
        ax.axhline(sweep.target, color="k", ls="--", lw=1, label=f"target {sweep.target:.6g}")
    ax.set_xlabel("rho")
    ax.set_title(sweep.name)
    ax.legend()
    _save(fig, path)
    plt.close(fig)
    return path


def pmf_figure(pmf, path: str, samples=None, xlabel: str = "k") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(pmf.support, pmf.probs, width=0.8, alpha=0.6, label="pmf")
    if samples is not None and len(samples):
        counts = np.bincount(np.asarray(samples) - pmf.lo, minlength=pmf.probs.size)[: pmf.probs.size]
        ax.plot(pmf.support, counts / len(samples), "k.", label="sampled")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("probability")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
    return path


def moments_figure(records, path: str, mu_L: float, mu_N: float) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot(records["L1"], records["N1"], ".", ms=2, alpha=0.3)
    ax.plot([mu_L], [mu_N], "r+", ms=14, mew=2, label="(rho n, rho* n)")
    ax.set_xlabel("L1")
    ax.set_ylabel("N1")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
    return path
