"""Matplotlib rendering of the curve reports, written to files next to the CSVs."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .jeffreys import JeffreysCurve
from .posterior import CoverageCurve


def render_coverage_curve(curve: CoverageCurve, path: str) -> None:
    """Plot conditional coverage of the standard 95% interval against the
    observed two-sided p-value (log x-axis)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(curve.p_values, curve.coverage, color="C0")
    ax.set_xscale("log")
    ax.set_xlabel("two-sided p-value")
    ax.set_ylabel("conditional coverage of the 95% interval")
    ax.axhline(0.95, color="grey", lw=0.8, ls="--")
    ax.set_title("Coverage of the standard interval under the default prior")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_jeffreys_curves(curves: Sequence[JeffreysCurve], path: str) -> None:
    """Plot the unnormalized sign/magnitude Jeffreys prior sqrt(I(theta))
    for each standard error."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve in curves:
        ax.plot(curve.theta_grid, curve.density_values, label=f"se = {curve.se:g}")
    ax.set_xlabel(r"$\theta = |\beta|$")
    ax.set_ylabel("unnormalized prior density")
    ax.set_title("Jeffreys prior for the coefficient magnitude")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
