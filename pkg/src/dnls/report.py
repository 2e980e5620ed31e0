"""Figure rendering for run outputs: time series of the functionals, the
identity residuals and the cumulative accumulators, written as PNG files
alongside the CSV."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dnls.functionals import DiagnosticsSeries
from dnls import identities


def render_figures(series: DiagnosticsSeries, out_dir: str,
                   scattering=None) -> list[str]:
    """Render the standard report figures; returns the written paths."""
    written = []
    t = np.array(series.times)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for name, label in [("mass", "M"), ("energy", "E"), ("energy_plus", "E+"),
                        ("modified_energy", "E+ - eta I")]:
        ax1.plot(t, series.column(name), label=label)
    ax1.set_xlabel("t")
    ax1.set_title("functionals")
    ax1.legend(fontsize=8)
    ax2.plot(t, series.column("h1"), label="H1 norm")
    ax2.plot(t, series.column("morawetz"), label="Morawetz I")
    ax2.set_xlabel("t")
    ax2.set_title("H1 and virial")
    ax2.legend(fontsize=8)
    path = os.path.join(out_dir, "functionals.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for fn, label in [(identities.mass_residuals, "mass"),
                      (identities.energy_residuals, "energy"),
                      (identities.virial_residuals, "virial")]:
        res, scale = fn(series)
        ax.semilogy(t, np.abs(res) / scale + 1e-300, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("relative residual")
    ax.set_title("identity residuals")
    ax.legend(fontsize=8)
    path = os.path.join(out_dir, "residuals.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("diss_mass", "led", "a_int", "l4", "l2s2"):
        ax.plot(t, series.accum_column(name), label=name)
    ax.set_xlabel("t")
    ax.set_title("cumulative spacetime integrals")
    ax.legend(fontsize=8)
    path = os.path.join(out_dir, "accumulators.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    if scattering is not None and len(scattering.times) >= 2:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(scattering.times[1:], scattering.consecutive_gaps, "o-",
                    label="consecutive Cauchy gap")
        ax.semilogy(scattering.times, scattering.forward_errors, "s--",
                    label="forward error vs u+")
        ax.set_xlabel("snapshot time")
        ax.set_title(f"scattering diagnosis: {scattering.verdict}")
        ax.legend(fontsize=8)
        path = os.path.join(out_dir, "scattering.png")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
