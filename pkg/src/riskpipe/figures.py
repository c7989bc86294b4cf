"""Report figures rendered to image files.

Everything here uses the Agg backend so rendering works in headless runs;
each function writes one PNG and returns the path it wrote.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmptyLedgerError, ParameterError
from .measures import RiskReport
from .scheduler import COMPLETELY_DIVISIBLE, TimingLedger
from .sensitivity import SensitivityReport

__all__ = ["loss_distribution_figure", "sensitivity_figure", "timing_figure"]


def loss_distribution_figure(
    returns: np.ndarray, report: RiskReport, path: str | Path
) -> Path:
    """Histogram of portfolio losses with the three risk levels marked."""
    losses = -np.asarray(returns, dtype=float)
    if losses.ndim != 1 or losses.size < 2:
        raise ParameterError("need a 1-d sample of at least 2 returns to plot")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.hist(losses, bins=min(200, max(10, losses.size // 50)), color="#9ecae1", density=True)
    for value, label, color in (
        (report.var, f"VaR {report.var:.4g}", "#fd8d3c"),
        (report.cvar, f"CVaR {report.cvar:.4g}", "#e6550d"),
        (report.evar, f"EVaR {report.evar:.4g}", "#a63603"),
    ):
        ax.axvline(value, color=color, linewidth=1.5, label=label)
    ax.set_xlabel("loss")
    ax.set_ylabel("density")
    ax.set_title(f"Loss distribution (alpha={report.alpha:g}, n={report.n}, h={report.horizon})")
    ax.legend(loc="upper left")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sensitivity_figure(report: SensitivityReport, path: str | Path) -> Path:
    """Paired bars of first-order and total-effect shares per input."""
    ids = list(report.input_ids)
    x = np.arange(len(ids))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(ids)), 4.0))
    ax.bar(x - width / 2, report.first, width, label="first order", color="#6baed6")
    ax.bar(x + width / 2, report.total, width, label="total effect", color="#2171b5")
    ax.set_xticks(x)
    ax.set_xticklabels(ids, rotation=30, ha="right")
    ax.set_ylabel("variance share")
    ax.set_title(f"Sensitivity ({report.estimator}, n={report.n})")
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def timing_figure(ledger: TimingLedger, path: str | Path) -> Path:
    """Stacked per-event phase times with the pipelined/serial totals."""
    rows = ledger.rows()
    if not rows:
        raise EmptyLedgerError("timing ledger is empty")
    seqs = [r.seq for r in rows]
    phases = (
        ("pt_ms", "think", "#c6dbef"),
        ("gt_ms", "generate", "#9ecae1"),
        ("st_ms", "synthesize", "#4292c6"),
        ("ot_ms", "other", "#084594"),
    )
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(rows)), 4.0))
    bottom = np.zeros(len(rows))
    for attr, label, color in phases:
        heights = np.array([getattr(r, attr) for r in rows])
        ax.bar(seqs, heights, bottom=bottom, label=label, color=color)
        bottom += heights
    summary = ledger.summary()
    ax.set_xlabel("event")
    ax.set_ylabel("milliseconds")
    ax.set_title(
        "Per-event timing (serial {serial:.0f} ms, pipelined bound {pred:.0f} ms)".format(
            serial=summary["serial_ms"],
            pred=summary["predicted_ms"][COMPLETELY_DIVISIBLE],
        )
    )
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
