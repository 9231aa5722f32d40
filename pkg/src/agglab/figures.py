"""Optional matplotlib renderings saved next to the delimited output."""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_report_figure(reports: Sequence, outdir: str) -> str:
    """Bar chart of bound vs empirical per report row, written to outdir/bounds.png."""
    os.makedirs(outdir, exist_ok=True)
    labels = [f"{r.experiment}\n{r.estimator_id.split(':')[0]}" for r in reports]
    bounds = [r.bound for r in reports]
    empirical = [r.empirical for r in reports]
    errs = [3.0 * r.stderr for r in reports]
    x = np.arange(len(reports))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(reports)), 4.0))
    ax.bar(x - 0.18, bounds, width=0.36, label="bound", color="#88c0d0")
    ax.bar(x + 0.18, empirical, width=0.36, yerr=errs, capsize=3, label="empirical", color="#bf616a")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("squared-response units")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "bounds.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_profile_figure(profile, outdir: str) -> str:
    """Global vs local complexity curves, written to outdir/profile.png."""
    os.makedirs(outdir, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(profile.betas, profile.global_values, label="global", color="#5e81ac")
    ax.plot(profile.betas, profile.local_values, label="local", color="#bf616a")
    ax.set_xlabel("inverse temperature")
    ax.set_ylabel("complexity")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "profile.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
