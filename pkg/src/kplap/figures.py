"""Matplotlib renderings of the pipeline outputs.

Everything draws through the Agg backend straight to files, so these
helpers are safe on headless machines.  Each function writes one PNG
next to whatever delimited output the caller produced and returns the
path it wrote.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_potential_figure(pairs, case, path, p) -> str:
    """Potential and slope per side, one row of two panels."""
    fig, (ax_u, ax_du) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    for flux, pot in pairs:
        label = flux.side.value
        ax_u.plot(pot.grid, pot.values, label=label)
        ax_du.plot(pot.grid, np.abs(pot.derivative), label=label)
    ax_u.axhline(0.0, color="0.8", lw=0.8, zorder=0)
    ax_u.set_xlabel("r")
    ax_u.set_ylabel("u(r)")
    ax_u.set_title(f"potential, p = {p:g}")
    ax_du.set_xlabel("r")
    ax_du.set_ylabel("|u'(r)|")
    ax_du.set_title("slope magnitude")
    for ax in (ax_u, ax_du):
        ax.legend(frameon=False, fontsize=8)
    fig.suptitle(f"{case.kind.value}, n = {case.n}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_sweep_figure(result, path) -> str:
    """Potential family against the limit profile plus convergence rates."""
    fig, (ax_fam, ax_conv) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    for trace in result.sides:
        for i, p in enumerate(result.p_values):
            ax_fam.plot(trace.grid, trace.potentials[i], lw=0.9,
                        alpha=0.4 + 0.6 * i / max(len(result.p_values) - 1, 1))
        ax_fam.plot(trace.grid, trace.limit_values, "k--", lw=1.2)
    ax_fam.set_xlabel("r")
    ax_fam.set_ylabel("u_p(r)")
    ax_fam.set_title("potentials and limit (dashed)")

    ps = np.asarray(result.p_values)
    ax_conv.loglog(ps, result.limit_sup, "o-", label="sup |u_p - limit|")
    if result.cauchy_sup.size:
        ax_conv.loglog(ps[:-1], result.cauchy_sup, "s-", label="Cauchy step")
    ax_conv.set_xlabel("p")
    ax_conv.set_title("convergence")
    ax_conv.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_oracle_figure(entries, path, p) -> str:
    """Direct minimizer against the analytic reconstruction, with error.

    ``entries`` is a list of (label, grid, oracle_values, reference_values).
    """
    fig, (ax_u, ax_err) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    worst = 0.0
    for label, grid, oracle_values, reference_values in entries:
        line, = ax_u.plot(grid, reference_values, label=f"{label} analytic")
        ax_u.plot(grid, oracle_values, "--", color=line.get_color(),
                  label=f"{label} minimizer")
        err = np.abs(np.asarray(oracle_values) - np.asarray(reference_values))
        worst = max(worst, float(err.max()))
        ax_err.semilogy(grid, np.maximum(err, 1e-18), label=label)
    ax_u.set_xlabel("r")
    ax_u.set_ylabel("u(r)")
    ax_u.set_title(f"two routes, p = {p:g}")
    ax_u.legend(frameon=False, fontsize=7)
    ax_err.set_xlabel("r")
    ax_err.set_ylabel("|difference|")
    ax_err.set_title(f"sup error = {worst:.3e}")
    ax_err.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_residual_figure(reports, path, p) -> str:
    """Interior equation residual per side on a log scale."""
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    for side_name, rep in reports:
        keep = np.isfinite(rep.residuals)
        ax.semilogy(rep.grid[keep], np.maximum(np.abs(rep.residuals[keep]), 1e-18),
                    lw=0.9, label=f"{side_name} (max {rep.max_residual:.2e})")
    ax.set_xlabel("r")
    ax.set_ylabel("|residual|")
    ax.set_title(f"interior equation residual, p = {p:g}")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
