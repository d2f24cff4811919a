"""Figure rendering for analysis artifacts.

All functions take a result object and a target path, render with the
non-interactive Agg backend and return the written path.  Rendering is
strictly opt-in from the command line so that report generation itself
stays plot-free.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_spectral_history",
    "plot_ode_trajectory",
    "plot_discrete_norms",
    "plot_threshold_scan",
    "plot_eta_envelope",
]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_spectral_history(estimate, path):
    """Convergence of the iterate-norm root toward the spectral radius."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    hist = np.asarray(estimate.history)
    ax.plot(np.arange(1, hist.size + 1), hist, marker=".", lw=1)
    ax.axhline(estimate.value, color="crimson", ls="--", lw=1,
               label=f"limit {estimate.value:.6g}")
    ax.set_xlabel("iteration n")
    ax.set_ylabel(r"$\|\Gamma^n(\mathbf{1})\|^{1/n}$")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_ode_trajectory(traj, path, max_components: int = 8):
    """Sup norm plus a thinned set of component curves."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    n = traj.states.shape[1]
    step = max(1, n // max_components)
    for i in range(0, n, step):
        ax.plot(traj.ts, traj.states[:, i], lw=0.7, alpha=0.5)
    ax.plot(traj.ts, traj.sup_norms(), color="black", lw=1.8, label="sup norm")
    if traj.escaped:
        ax.axvline(traj.escape_time, color="crimson", ls="--", lw=1, label="escape")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_discrete_norms(traj, path):
    """Sup-norm sequence of a discrete trajectory on a log scale."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    norms = traj.norms()
    ax.semilogy(np.arange(norms.size), np.maximum(norms, 1e-300),
                marker=".", lw=1)
    ax.set_xlabel("step k")
    ax.set_ylabel("sup norm")
    return _save(fig, path)


def plot_threshold_scan(scan, path):
    """Decay / non-decay classification over the (a, b) grid."""
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for (a, b), decay in zip(scan.pairs, scan.decays):
        ax.scatter(a, b, c="tab:green" if decay else "tab:red",
                   marker="o" if decay else "x", s=60)
    ax.set_xlabel("a")
    ax.set_ylabel("b")
    ax.set_title(f"{scan.kind_name} network, T={scan.T:g}")
    return _save(fig, path)


def plot_eta_envelope(env, path):
    """Sampled cone-distance minima and their isotonic envelope."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(env.radii, env.raw_values, "o", label="sampled minimum")
    ax.plot(env.radii, env.eta_values, "-", label="isotonic envelope")
    ax.set_xlabel("radius r")
    ax.set_ylabel(r"$\eta(r)$")
    ax.legend(loc="best")
    return _save(fig, path)
