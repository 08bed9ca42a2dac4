"""Headless figure rendering for run outputs.

One dynamics figure per scenario (populations solid, coherence dashed,
one color per method), one concurrence figure, and an NM-vs-temperature
overview per run.  Files only; no interactive backends.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

METHOD_COLORS = {"tc2": "tab:blue", "tl2": "tab:green", "heom": "black",
                 "tc2_history_oracle": "tab:orange"}

_DPI = 150


def _color(method):
    return METHOD_COLORS.get(method, None)


def plot_dynamics(path, trajectories, title=""):
    """Population and coherence panels for a dict of method -> Trajectory."""
    fig, (ax_pop, ax_coh) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    for method, traj in trajectories.items():
        ax_pop.plot(traj.times, traj.population_plus(),
                    color=_color(method), label=method)
        ax_coh.plot(traj.times, traj.coherence_abs(),
                    color=_color(method), linestyle="--", label=method)
    ax_pop.set_ylabel(r"$\rho_{++}$")
    ax_coh.set_ylabel(r"$|\rho_{-+}|$")
    ax_coh.set_xlabel("time (fs)")
    ax_pop.set_title(title)
    ax_pop.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_concurrence(path, concurrences, title=""):
    """Concurrence curves for a dict of method -> (times, values)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for method, (times, values) in concurrences.items():
        ax.plot(times, values, color=_color(method), label=method)
    ax.set_xlabel("time (fs)")
    ax.set_ylabel("concurrence")
    ax.set_ylim(bottom=-0.02)
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_nm_vs_temperature(path, rows, title="non-Markovianity vs temperature"):
    """NM summary rows grouped into one line per (method, lambda)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    groups = {}
    for row in rows:
        key = (row["method"], row["lambda_cm1"], row["gamma_cm1"], row["omega0_cm1"])
        groups.setdefault(key, []).append((row["temperature_K"], row["nm_value"]))
    styles = ["-", "--", "-.", ":"]
    lam_style = {}
    for (method, lam, gamma, omega0), points in sorted(groups.items()):
        points.sort()
        if lam not in lam_style:
            lam_style[lam] = styles[len(lam_style) % len(styles)]
        temps, values = zip(*points)
        ax.plot(temps, values, lam_style[lam], color=_color(method),
                marker="o", markersize=3,
                label=rf"{method}, $\lambda$={lam:g}")
    ax.set_xlabel("temperature (K)")
    ax.set_ylabel("non-Markovianity")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_bath_audit(path, times, series_values, oracle_values, title="bath series audit"):
    """Series vs quadrature comparison (real and imaginary parts)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(times, series_values.real, "-", color="tab:blue", label="series Re")
    ax.plot(times, series_values.imag, "-", color="tab:green", label="series Im")
    ax.plot(times, oracle_values.real, "o", color="tab:blue", markersize=3,
            fillstyle="none", label="quadrature Re")
    ax.plot(times, oracle_values.imag, "o", color="tab:green", markersize=3,
            fillstyle="none", label="quadrature Im")
    ax.set_xlabel("time (fs)")
    ax.set_ylabel(r"$G(t)$ (rad/fs)$^2$")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
