"""Log-log regret plots written as SVG."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .rates import fit_rate  # noqa: E402
from .records import GRID_MIN_TOL, RegretRecord  # noqa: E402


def plot_regret(csv_paths, out_path, window=(50, 500), title: str | None = None) -> Path:
    """Plot the regret curves in ``csv_paths`` with their fitted slopes."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for path in csv_paths:
        rec = RegretRecord.read(path)
        n = rec.steps
        r = np.where(rec.regret > 0, rec.regret, GRID_MIN_TOL)
        lo, hi = window[0], min(window[1], len(rec))
        label = Path(path).stem
        if hi > lo:
            slope = fit_rate(rec, (lo, hi))
            label = f"{label} (slope {slope:.2f})"
            mask = (n >= lo) & (n <= hi)
            coef = np.polyfit(np.log(n[mask]), np.log(r[mask]), 1)
            ax.plot(n[mask], np.exp(np.polyval(coef, np.log(n[mask]))), "--", lw=0.8, color="0.4")
        ax.plot(n, r, lw=1.0, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("simple regret")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path
