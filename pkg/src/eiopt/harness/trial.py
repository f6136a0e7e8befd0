"""Driving a single strategy run against an objective."""

from __future__ import annotations

import numpy as np

from ..domain import Box
from ..errors import DuplicatePointError, ProtocolError, SingularDesignError
from ..strategy import Strategy, StrategyConfig, naive_recommend
from .objectives import Objective
from .records import RegretRecord


def _tag_step(exc: Exception, step: int) -> Exception:
    exc.step = step
    if exc.args and isinstance(exc.args[0], str):
        exc.args = (f"step {step}: {exc.args[0]}",) + exc.args[1:]
    else:
        exc.args = (f"step {step}",) + exc.args
    return exc


def run_trial(config: StrategyConfig, objective: Objective, n_steps: int, seed: int,
              domain: Box | None = None, initial_design=None) -> RegretRecord:
    """Run ``config`` on ``objective`` for ``n_steps`` observations.

    The recommendation after each step is the best observed point, except for
    the ``naive`` variant whose recommendation minimises the interpolant.
    Errors raised by the strategy keep their type and gain a ``step``
    attribute (1-based) plus a ``"step n: "`` message prefix.
    """
    domain = domain or objective.domain
    if n_steps < config.k_init:
        raise ValueError(f"n_steps={n_steps} is below k_init={config.k_init}")
    state = Strategy(config, domain, seed, initial_design)
    points = np.empty((n_steps, domain.dim))
    values = np.empty(n_steps)
    rec_values = np.empty(n_steps)
    for i in range(n_steps):
        step = i + 1
        try:
            x = state.next_design_point()
            z = float(objective(x))
            state.observe(x, z)
            if config.variant == "naive":
                rec = naive_recommend(state.design, config.kernel, domain, config.budget, seed=(seed, step))
                rec_values[i] = float(objective(rec))
            else:
                rec_values[i] = state.best_value
        except (ProtocolError, DuplicatePointError, SingularDesignError) as exc:
            raise _tag_step(exc, step)
        points[i], values[i] = x, z
    metadata = {
        "config": config.to_dict(),
        "seed": int(seed),
        "objective": objective.descriptor,
        "domain": domain.to_dict(),
        "n_steps": int(n_steps),
        "exact_min": bool(objective.exact_min),
    }
    if initial_design is not None:
        metadata["initial_design"] = np.asarray(initial_design, dtype=float).tolist()
    return RegretRecord(points, values, rec_values, objective.min_value, metadata)
