"""Objectives paired with their minimum and a reproducible descriptor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..domain import Box
from ..funcspace import (
    BumpFunction,
    CounterexamplePair,
    RkhsSpanFunction,
    grid_minimum,
    make_counterexample,
    span_suite,
)
from ..kernel import KernelSpec


@dataclass(frozen=True)
class Objective:
    """A vectorised function on ``domain`` with known (or grid-estimated) minimum."""

    func: Callable
    domain: Box
    min_value: float
    descriptor: dict
    exact_min: bool = True

    def __call__(self, x):
        return self.func(x)


def constant_objective(domain: Box, value: float = 0.0) -> Objective:
    def func(x):
        pts = np.asarray(x, dtype=float)
        if pts.ndim <= 1 and pts.size == domain.dim:
            return float(value)
        return np.full(len(pts.reshape(-1, domain.dim)), float(value))

    return Objective(func, domain, float(value), {"type": "constant", "value": float(value)})


def span_objective(f: RkhsSpanFunction, domain: Box, desc: dict | None = None) -> Objective:
    """Kernel expansion; its minimum comes from a dense grid plus polishing."""
    _, fmin = f.minimum(domain)
    return Objective(f, domain, fmin, desc or f.descriptor(), exact_min=False)


def counterexample_objective(pair: CounterexamplePair, spiked: bool = True,
                             desc: dict | None = None) -> Objective:
    func = pair.g_spiked if spiked else pair.f_plateau
    base = dict(desc or pair.descriptor())
    base["spiked"] = spiked
    return Objective(func, pair.domain, pair.min_g if spiked else pair.min_f, base)


def bump_objective(bump: BumpFunction, domain: Box) -> Objective:
    desc = {"type": "bump", "center": list(bump.center), "radius": bump.radius, "depth": bump.depth}
    return Objective(bump, domain, min(0.0, bump.depth), desc)


def suite_objectives(kernel: KernelSpec, domain: Box, count: int = 5, seed: int = 0,
                     n_centers: int = 8, norm: float = 1.0) -> list:
    """The span-objective suite as :class:`Objective` instances."""
    fs = span_suite(kernel, domain, count, seed, n_centers, norm)
    out = []
    for i, f in enumerate(fs):
        desc = {"type": "span_suite", "kernel": kernel.to_dict(), "count": count, "seed": seed,
                "n_centers": n_centers, "norm": norm, "index": i}
        out.append(span_objective(f, domain, desc))
    return out


def build_objective(desc: dict, domain: Box) -> Objective:
    """Construct an objective from a config/descriptor dict.

    Recognised ``type`` values: ``constant``, ``span`` (explicit centres and
    weights), ``span_suite`` (member ``index`` of a seeded suite),
    ``counterexample`` and ``bump``.
    """
    kind = desc.get("type")
    if kind == "constant":
        return constant_objective(domain, desc.get("value", 0.0))
    if kind == "span":
        f = RkhsSpanFunction(KernelSpec.from_dict(desc["kernel"]), desc["centers"], desc["weights"],
                             desc.get("offset", 0.0))
        return span_objective(f, domain)
    if kind == "span_suite":
        kernel = KernelSpec.from_dict(desc["kernel"])
        suite = suite_objectives(kernel, domain, desc.get("count", 5), desc.get("seed", 0),
                                 desc.get("n_centers", 8), desc.get("norm", 1.0))
        return suite[desc.get("index", 0)]
    if kind == "counterexample":
        if "outer" in desc:
            pair = CounterexamplePair(domain, tuple(desc["center"]), desc["outer"], desc["inner"],
                                      desc["w_radius"])
        else:
            pair = make_counterexample(domain, desc.get("v0_fraction", 0.6), desc.get("w_radius", 0.03))
        return counterexample_objective(pair, desc.get("spiked", True))
    if kind == "bump":
        return bump_objective(BumpFunction(tuple(desc["center"]), desc["radius"], desc["depth"]), domain)
    raise ValueError(f"unknown objective type {kind!r}")


def grid_objective(func, domain: Box, desc: dict) -> Objective:
    """Arbitrary vectorised function; its minimum is estimated on a dense grid."""
    _, fmin = grid_minimum(func, domain)
    return Objective(func, domain, fmin, desc, exact_min=False)
