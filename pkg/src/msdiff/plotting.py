"""Figure rendering for run reports.

Figures are auxiliary artifacts written next to the CSV outputs; the CSVs
remain the primary, machine-readable record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import ConvergenceReport, TruncationReport
from .grid import GridSpec
from .stepper import SimulationState


def plot_history(state: SimulationState, path) -> None:
    """Energy decay and minimum density over the run, side by side."""
    hist = state.history
    times = np.array([d.time for d in hist])
    energy = np.array([d.energy for d in hist])
    min_rho = np.array([d.min_density for d in hist])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(times, energy)
    ax1.set_xlabel("t")
    ax1.set_ylabel("energy")
    ax2.semilogy(times, min_rho)
    ax2.set_xlabel("t")
    ax2.set_ylabel("min density")
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_snapshot(rho: np.ndarray, g: GridSpec, path, title: str = "") -> None:
    """Density fields: line plot per species in 1D, one panel per species in 2D."""
    n = rho.shape[0]
    if g.dim == 1:
        xs = g.cell_centers()
        fig, ax = plt.subplots(figsize=(5.5, 3.6))
        for i in range(n):
            ax.plot(xs, rho[i], label=f"rho_{i + 1}")
        ax.set_xlabel("x")
        ax.set_ylabel("density")
        ax.legend()
        ax.grid(True, alpha=0.3)
    else:
        fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.0), squeeze=False)
        xs = g.cell_centers()
        for i, ax in enumerate(axes[0]):
            im = ax.pcolormesh(xs, xs, rho[i].T, shading="nearest")
            ax.set_title(f"rho_{i + 1}")
            fig.colorbar(im, ax=ax)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_convergence(report: ConvergenceReport, path, xlabel: str) -> None:
    """Log-log errors with the fitted slope line."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.loglog(report.params, report.err_linf, "o-", label="sup error")
    ax.loglog(report.params, report.err_l2, "s--", label="L2 error")
    if report.slope_linf is not None:
        x = np.asarray(report.params, dtype=float)
        anchor = report.err_linf[-1]
        ax.loglog(x, anchor * (x / x[-1]) ** report.slope_linf, "k:",
                  label=f"slope {report.slope_linf:.2f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_truncation(report: TruncationReport, path) -> None:
    """Sup norms of the three residuals against dt + h^2."""
    scale = (report.dt_values[None, :] + report.h_values[:, None] ** 2).ravel()
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for tau, label in ((report.tau1, "tau1"), (report.tau2, "tau2"),
                       (report.tau3, "tau3")):
        ax.loglog(scale, tau.ravel(), "o", label=label)
    xs = np.sort(scale)
    ax.loglog(xs, report.joint_fit_constant * xs, "k:",
              label=f"C (dt + h^2), C={report.joint_fit_constant:.2f}")
    ax.set_xlabel("dt + h^2")
    ax.set_ylabel("sup residual")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
