"""Declarative experiment configuration, loaded from a JSON file.

Schema (all keys optional unless marked)::

    {
      "domain": [[0, 1]],                     # list of [lo, hi] or {"lower", "upper"}
      "kernel": {"family": "matern", "nu": "1/2", "theta": [0.2]},   # required
      "strategy": {"variant": "ei_fixed",     # naive | ei_fixed | ei_mle | ei_robust
                   "sigma": 1.0, "epsilon": 0.0, "k_init": 5,
                   "c_n": "n_log_n", "theta_bounds": [[0.02], [0.5]],
                   "mle_grid": 16, "budget": 512},
      "objective": {"type": "span_suite", "index": 0, "count": 5, "seed": 0},
      "objectives": [...],                    # several objectives, for "rates"
      "steps": 500,
      "seeds": [0, 1, 2] | {"start": 0, "count": 20},
      "window": [50, 500],
      "experiment": {...}                     # keyword overrides for diverge/adversary/mesh
    }

Without ``objective``/``objectives`` the seeded span suite for the kernel is
used. Objective dicts follow :func:`eiopt.harness.objectives.build_objective`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..domain import Box
from ..kernel import KernelSpec
from ..strategy import StrategyConfig
from .objectives import build_objective, suite_objectives


@dataclass(frozen=True)
class ExperimentConfig:
    domain: Box
    kernel: KernelSpec
    strategy: StrategyConfig
    objective_specs: list
    steps: int = 100
    seeds: tuple = (0,)
    window: tuple = (50, 500)
    experiment: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def objectives(self) -> list:
        if not self.objective_specs:
            return suite_objectives(self.kernel, self.domain)
        # Suite members default to the configured kernel.
        specs = [spec if "kernel" in spec or spec.get("type") != "span_suite"
                 else {**spec, "kernel": self.kernel.to_dict()} for spec in self.objective_specs]
        return [build_objective(spec, self.domain) for spec in specs]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = dict(self.raw)
        raw["seeds"] = [int(seed)]
        return from_dict(raw)


def _seeds(spec) -> tuple:
    if spec is None:
        return (0,)
    if isinstance(spec, int):
        return (spec,)
    if isinstance(spec, dict):
        start = int(spec.get("start", 0))
        return tuple(range(start, start + int(spec["count"])))
    return tuple(int(s) for s in spec)


def from_dict(raw: dict) -> ExperimentConfig:
    if "kernel" not in raw:
        raise ValueError("config needs a 'kernel' entry")
    kernel = KernelSpec.from_dict(raw["kernel"])
    domain = Box.from_dict(raw["domain"]) if "domain" in raw else Box.unit(kernel.dim)
    strat = dict(raw.get("strategy", {"variant": "ei_fixed"}))
    strat["kernel"] = raw["kernel"] if "kernel" not in strat else strat["kernel"]
    strategy = StrategyConfig.from_dict(strat)
    if "objectives" in raw:
        objective_specs = list(raw["objectives"])
    elif "objective" in raw:
        objective_specs = [raw["objective"]]
    else:
        objective_specs = []
    window = tuple(int(v) for v in raw.get("window", (50, 500)))
    return ExperimentConfig(domain, kernel, strategy, objective_specs, int(raw.get("steps", 100)),
                            _seeds(raw.get("seeds")), window, dict(raw.get("experiment", {})), dict(raw))


def load_config(path) -> ExperimentConfig:
    return from_dict(json.loads(Path(path).read_text()))
