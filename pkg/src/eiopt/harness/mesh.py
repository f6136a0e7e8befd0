"""Mesh-norm diagnostics: ``h_n = sup_x min_i |x - x_i|`` over a box."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.spatial import QhullError, Voronoi, cKDTree
from scipy.stats import kendalltau

from ..domain import Box
from .records import MeshStats

MIN_GRID_NODES = 1000


def _default_resolution(d: int) -> int:
    return max(int(math.ceil(1e5 ** (1.0 / d))), 11)


def _grid(domain: Box, resolution: int) -> np.ndarray:
    if resolution ** domain.dim < MIN_GRID_NODES:
        raise ValueError(f"grid needs at least {MIN_GRID_NODES} nodes, got {resolution}^{domain.dim}")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(domain.lower, domain.upper)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)


def _points(points, domain: Box) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, domain.dim)
    if len(pts) == 0:
        raise ValueError("mesh norm of an empty design is undefined")
    return pts


def grid_mesh_norm(points, domain: Box, resolution: int | None = None) -> float:
    """Largest nearest-point distance over a regular grid of ``resolution^d`` nodes.

    Grid nodes are points of the box, so this never exceeds the exact value
    and falls short of it by at most half a grid diagonal.
    """
    pts = _points(points, domain)
    grid = _grid(domain, resolution or _default_resolution(domain.dim))
    dist, _ = cKDTree(pts).query(grid)
    return float(dist.max())


def _exact_1d(pts: np.ndarray, domain: Box) -> float:
    xs = np.sort(pts[:, 0])
    ends = max(xs[0] - domain.lower[0], domain.upper[0] - xs[-1])
    inner = np.max(np.diff(xs)) / 2.0 if len(xs) > 1 else 0.0
    return float(max(ends, inner))


def _exact_2d(pts: np.ndarray, domain: Box) -> float:
    # The farthest point lies at a Voronoi vertex, where a Voronoi edge meets
    # the boundary, or at a corner. Mirroring the points across each edge turns
    # the boundary crossings into ordinary vertices.
    lo, hi = domain.lo, domain.hi
    tree = cKDTree(pts)
    # A mirror image can only matter for points closer to that edge than h.
    coarse = 101
    nodes = _grid(domain, coarse)
    h_upper = tree.query(nodes)[0].max() + 0.5 * float(np.linalg.norm(domain.width)) / (coarse - 1)
    copies = [pts]
    for j in range(2):
        for bound in (lo[j], hi[j]):
            near = pts[np.abs(pts[:, j] - bound) <= h_upper]
            m = near.copy()
            m[:, j] = 2.0 * bound - m[:, j]
            copies.append(m)
    corners = np.array(list(product(*zip(lo, hi))), dtype=float)
    cands = [corners]
    allp = np.unique(np.vstack(copies), axis=0)
    if len(allp) >= 4:
        try:
            verts = Voronoi(allp).vertices
        except QhullError:
            verts = None
        if verts is None:
            return grid_mesh_norm(pts, domain, 2001)
        pad = 1e-12 * float(np.max(domain.width))
        inside = np.all((verts >= lo - pad) & (verts <= hi + pad), axis=1)
        cands.append(np.clip(verts[inside], lo, hi))
    dist, _ = tree.query(np.vstack(cands))
    return float(dist.max())


def exact_mesh_norm(points, domain: Box) -> float:
    """Exact mesh norm for ``d <= 2``."""
    pts = _points(points, domain)
    if domain.dim == 1:
        return _exact_1d(pts, domain)
    if domain.dim == 2:
        return _exact_2d(pts, domain)
    raise ValueError("exact mesh norm is only implemented for d <= 2")


def mesh_norm(points, domain: Box, resolution: int | None = None, exact: bool = False) -> float:
    """Mesh norm of ``points`` in ``domain``; grid-based unless ``exact``."""
    if exact:
        return exact_mesh_norm(points, domain)
    return grid_mesh_norm(points, domain, resolution)


def mesh_stats(points, domain: Box, resolution: int | None = None) -> MeshStats:
    """``h_n`` for every prefix of ``points``.

    Exact for ``d <= 2``; otherwise a running minimum over grid nodes.
    """
    pts = _points(points, domain)
    if domain.dim <= 2:
        return MeshStats([exact_mesh_norm(pts[: n + 1], domain) for n in range(len(pts))])
    grid = _grid(domain, resolution or _default_resolution(domain.dim))
    nearest = np.full(len(grid), np.inf)
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        np.minimum(nearest, np.linalg.norm(grid - p, axis=1), out=nearest)
        out[i] = nearest.max()
    return MeshStats(out)


# ---------------------------------------------------------------------------
# Random designs


def normalized_mesh(h, n, d) -> np.ndarray:
    """``h_n (n / log n)^(1/d)``, bounded in probability for uniform designs."""
    n = np.asarray(n, dtype=float)
    return np.asarray(h, dtype=float) * (n / np.log(n)) ** (1.0 / d)


def trend_test(n_values, stats) -> float:
    """One-sided Mann-Kendall p-value for an increasing trend of ``stats`` in ``n``.

    Observations are pooled across replications: ``stats`` has one row per
    replication and one column per entry of ``n_values``.
    """
    stats = np.asarray(stats, dtype=float)
    ns = np.broadcast_to(np.asarray(n_values, dtype=float), stats.shape)
    res = kendalltau(ns.ravel(), stats.ravel(), alternative="greater")
    return float(res.pvalue)


@dataclass(frozen=True)
class MeshExperiment:
    d: int
    n_values: tuple
    mesh: np.ndarray  # (n_seeds, len(n_values)) raw h_n
    normalized: np.ndarray  # same shape, h_n (n / log n)^(1/d)
    p_value: float

    @property
    def percentile95(self) -> np.ndarray:
        return np.percentile(self.normalized, 95, axis=0)

    @property
    def mesh_percentile95(self) -> np.ndarray:
        return np.percentile(self.mesh, 95, axis=0)

    def table(self) -> list:
        return [
            {"n": int(n), "h95": float(h), "normalized95": float(s),
             "normalized_median": float(m)}
            for n, h, s, m in zip(self.n_values, self.mesh_percentile95, self.percentile95,
                                  np.median(self.normalized, axis=0))
        ]


def random_mesh_experiment(n_values=(100, 1000, 10000), n_seeds: int = 50, d: int = 1,
                           seed: int = 0) -> MeshExperiment:
    """Mesh norms of nested i.i.d. uniform designs on ``[0, 1]^d``.

    Each replication draws ``max(n_values)`` points once and measures its
    prefixes, so ``h_n`` is non-increasing along every replication.
    """
    n_values = tuple(sorted(int(n) for n in n_values))
    if n_values[0] < 2:
        raise ValueError("n must be at least 2 for the log normalisation")
    domain = Box.unit(d)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_seeds)]
    mesh = np.empty((n_seeds, len(n_values)))
    for r, rng in enumerate(rngs):
        pts = rng.random((n_values[-1], d))
        for c, n in enumerate(n_values):
            mesh[r, c] = mesh_norm(pts[:n], domain, exact=d <= 2)
    normalized = normalized_mesh(mesh, np.asarray(n_values), d)
    return MeshExperiment(d, n_values, mesh, normalized, trend_test(n_values, normalized))
