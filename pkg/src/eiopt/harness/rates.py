"""Empirical convergence rates of simple regret."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..strategy import StrategyConfig
from .records import GRID_MIN_TOL, RegretRecord
from .trial import run_trial


def fit_rate(record, window=(50, 500), floor: float = GRID_MIN_TOL) -> float:
    """Least-squares slope of ``log regret`` against ``log n`` over ``window``.

    ``record`` is a :class:`RegretRecord` or a plain array of regrets indexed
    from ``n = 1``. Non-positive regrets are replaced by ``floor``.
    """
    regret = record.regret if isinstance(record, RegretRecord) else np.asarray(record, dtype=float)
    n = np.arange(1, len(regret) + 1)
    lo, hi = window
    mask = (n >= lo) & (n <= hi)
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"window {window} holds fewer than two steps")
    r = regret[mask]
    r = np.where(r > 0, r, floor)
    slope, _ = np.polyfit(np.log(n[mask]), np.log(r), 1)
    return float(slope)


@dataclass(frozen=True)
class RateResult:
    """Slopes and per-step regrets, indexed ``[objective, seed]``."""

    slopes: np.ndarray
    regrets: np.ndarray  # (n_objectives, n_seeds, n_steps)
    records: list

    @property
    def median_slope(self) -> float:
        return float(np.median(self.slopes))

    def median_regret_at(self, n: int) -> np.ndarray:
        """Median over seeds of the regret after ``n`` steps, per objective."""
        return np.median(self.regrets[:, :, n - 1], axis=1)


def rate_sweep(config: StrategyConfig, objectives: list, seeds, n_steps: int,
               window=(50, 500)) -> RateResult:
    """Run every (objective, seed) pair in order and fit a slope to each."""
    seeds = list(seeds)
    slopes = np.empty((len(objectives), len(seeds)))
    regrets = np.empty((len(objectives), len(seeds), n_steps))
    records = []
    for i, obj in enumerate(objectives):
        for j, seed in enumerate(seeds):
            rec = run_trial(config, obj, n_steps, seed)
            records.append(rec)
            regrets[i, j] = rec.regret
            slopes[i, j] = fit_rate(rec, (window[0], min(window[1], n_steps)))
    return RateResult(slopes, regrets, records)


def slope_table(result: RateResult, objectives: list) -> list:
    rows = []
    for i, obj in enumerate(objectives):
        rows.append({"objective": i, "descriptor": obj.descriptor,
                     "median_slope": float(np.median(result.slopes[i])),
                     "slopes": result.slopes[i].tolist()})
    return rows

