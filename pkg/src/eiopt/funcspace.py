"""Objective functions with known ground truth.

* :class:`RkhsSpanFunction` -- finite kernel expansions, whose native-space
  norm is exactly ``sqrt(lambda^T V lambda)``.
* :class:`BumpFunction` -- the standard compactly supported mollifier.
* :class:`CounterexamplePair` -- a smooth plateau function and the same
  function with a hidden negative spike, on which estimated-parameter EI
  stalls.
* :class:`BumpFamily` -- scaled bumps on a ``2k``-grid with disjoint
  supports, used by the minimax lower-bound adversary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .domain import Box
from .kernel import KernelSpec, cross, gram


def _batch(x, dim):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or (arr.ndim == 1 and (dim > 1 or arr.size == 1)):
        return arr.reshape(1, dim), True
    return arr.reshape(-1, dim), False


def grid_minimum(func, domain: Box, nodes_per_dim: int | None = None, extra=None, n_polish: int = 5):
    """Minimum of ``func`` over ``domain`` by dense grid plus local polishing.

    Returns ``(x_min, f_min)``. ``extra`` points (e.g. kernel centres, where
    rough kernels have cusps) are always included as candidates.
    """
    d = domain.dim
    if nodes_per_dim is None:
        nodes_per_dim = 10_000 if d == 1 else max(int(round(2e5 ** (1.0 / d))), 10)
    axes = [np.linspace(lo, hi, nodes_per_dim) for lo, hi in zip(domain.lower, domain.upper)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    if extra is not None and len(extra):
        grid = np.vstack([grid, domain.clip(np.asarray(extra, dtype=float).reshape(-1, d))])
    vals = np.asarray(func(grid), dtype=float)
    best_x = grid[int(np.argmin(vals))]
    best_f = float(np.min(vals))
    bounds = list(zip(domain.lower, domain.upper))
    for idx in np.argsort(vals, kind="stable")[:n_polish]:
        res = minimize(lambda p: float(np.asarray(func(p.reshape(1, d)))[0]), grid[idx],
                       method="L-BFGS-B", bounds=bounds)
        if res.fun < best_f:
            best_f, best_x = float(res.fun), np.asarray(res.x)
    return best_x, best_f


# ---------------------------------------------------------------------------
# Kernel expansions


@dataclass(frozen=True, eq=False)
class RkhsSpanFunction:
    """``f(x) = offset + sum_i weights_i K_theta(x - centers_i)``."""

    spec: KernelSpec
    centers: np.ndarray
    weights: np.ndarray
    offset: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, self.spec.dim)
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if len(centers) != len(weights):
            raise ValueError("need one weight per centre")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "weights", weights)

    @property
    def norm(self) -> float:
        return math.sqrt(max(float(self.weights @ gram(self.spec, self.centers) @ self.weights), 0.0))

    def __call__(self, x):
        pts, single = _batch(x, self.spec.dim)
        out = self.offset + cross(self.spec, self.centers, pts).T @ self.weights
        return float(out[0]) if single else out

    def minimum(self, domain: Box):
        """``(x_min, f_min)`` over ``domain``; cached per domain."""
        key = (domain.lower, domain.upper)
        if key not in self._cache:
            self._cache[key] = grid_minimum(self, domain, extra=self.centers)
        return self._cache[key]

    def descriptor(self) -> dict:
        return {
            "type": "span",
            "kernel": self.spec.to_dict(),
            "centers": self.centers.tolist(),
            "weights": self.weights.tolist(),
            "offset": self.offset,
        }


def eval_span(f: RkhsSpanFunction, x):
    return f(x)


def random_span(spec: KernelSpec, domain: Box, n_centers: int, rng: np.random.Generator,
                norm: float = 1.0, offset: float = 0.0) -> RkhsSpanFunction:
    """Random kernel expansion with centres uniform in ``domain``, scaled to ``norm``."""
    centers = domain.uniform(rng, n_centers)
    weights = rng.standard_normal(n_centers)
    f = RkhsSpanFunction(spec, centers, weights, offset)
    return RkhsSpanFunction(spec, centers, weights * (norm / f.norm), offset)


def span_suite(spec: KernelSpec, domain: Box, count: int = 5, seed: int = 0,
               n_centers: int = 8, norm: float = 1.0) -> list:
    """A reproducible list of ``count`` random kernel expansions."""
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
    return [random_span(spec, domain, n_centers, r, norm) for r in rngs]


# ---------------------------------------------------------------------------
# Bumps


@dataclass(frozen=True)
class BumpFunction:
    """``depth * exp(1 - 1/(1 - r^2))`` for ``r = |x - center| / radius < 1``, else 0."""

    center: tuple
    radius: float
    depth: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def __call__(self, x):
        pts, single = _batch(x, self.dim)
        r2 = np.sum((pts - np.asarray(self.center)) ** 2, axis=1) / self.radius**2
        out = np.zeros(len(pts))
        inside = r2 < 1.0
        out[inside] = self.depth * np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return float(out[0]) if single else out

    def support_contains(self, x) -> np.ndarray:
        pts, _ = _batch(x, self.dim)
        return np.sum((pts - np.asarray(self.center)) ** 2, axis=1) < self.radius**2


def eval_bump(b: BumpFunction, x):
    return b(x)


def smoothstep(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)

    def h(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a, b = h(t), h(1.0 - t)
    return a / (a + b)


# ---------------------------------------------------------------------------
# Counterexample for estimated-parameter EI


@dataclass(frozen=True)
class CounterexamplePair:
    """Plateau function ``f`` and its spiked twin ``g``.

    In unit coordinates ``u`` of the domain, with per-coordinate offsets
    ``a_i = |u_i - c_i|``:

    * ``f = prod_i T(a_i)`` where ``T`` is 1 on ``[0, inner]`` and 0 on
      ``[outer, inf)``, so ``f = 0`` on V0 (sup-distance >= outer) and
      ``f = 1`` on V1 (sup-distance <= inner);
    * ``g = f - 2 * bump`` with the bump supported on W, the Euclidean ball of
      radius ``w_radius`` around ``c``.
    """

    domain: Box
    center: tuple
    outer: float
    inner: float
    w_radius: float

    @property
    def spike(self) -> BumpFunction:
        return BumpFunction(self.center, self.w_radius, -2.0)

    def _unit(self, x):
        pts, single = _batch(x, self.domain.dim)
        return self.domain.to_unit(pts), single

    def f_plateau(self, x):
        u, single = self._unit(x)
        a = np.abs(u - np.asarray(self.center))
        out = np.prod(smoothstep((self.outer - a) / (self.outer - self.inner)), axis=1)
        return float(out[0]) if single else out

    def g_spiked(self, x):
        u, single = self._unit(x)
        out = np.atleast_1d(self.f_plateau(self.domain.from_unit(u))) + self.spike(u)
        return float(out[0]) if single else out

    def in_w(self, x) -> np.ndarray:
        u, _ = self._unit(x)
        return self.spike.support_contains(u)

    def in_v0(self, x) -> np.ndarray:
        u, _ = self._unit(x)
        return np.max(np.abs(u - np.asarray(self.center)), axis=1) >= self.outer

    def in_v1(self, x) -> np.ndarray:
        u, _ = self._unit(x)
        return np.max(np.abs(u - np.asarray(self.center)), axis=1) <= self.inner

    @property
    def min_f(self) -> float:
        return 0.0

    @property
    def min_g(self) -> float:
        return -1.0

    @property
    def argmin_g(self) -> np.ndarray:
        return self.domain.from_unit(np.asarray(self.center))

    def descriptor(self) -> dict:
        return {
            "type": "counterexample",
            "domain": self.domain.to_dict(),
            "center": list(self.center),
            "outer": self.outer,
            "inner": self.inner,
            "w_radius": self.w_radius,
        }


def make_counterexample(domain: Box, v0_fraction: float = 0.6, w_radius: float = 0.03,
                        seed=None, inner_ratio: float = 0.25) -> CounterexamplePair:
    """Build the plateau/spike pair.

    ``v0_fraction`` is the volume fraction of the unit-scaled domain on which
    ``f`` vanishes; V1 has sup-radius ``inner_ratio`` times that of V0's
    complement. The centre is the domain centre, or uniform over admissible
    positions when ``seed`` is given.
    """
    d = domain.dim
    if not 0.0 < v0_fraction < 1.0:
        raise ValueError("v0_fraction must lie in (0, 1)")
    outer = 0.5 * (1.0 - v0_fraction) ** (1.0 / d)
    inner = inner_ratio * outer
    if not 0.0 < w_radius < inner:
        raise ValueError(f"w_radius must lie in (0, {inner:g}) so that W sits inside V1")
    if seed is None:
        center = (0.5,) * d
    else:
        rng = np.random.default_rng(seed)
        center = tuple(rng.uniform(outer, 1.0 - outer, d))
    return CounterexamplePair(domain, center, outer, inner, w_radius)


# ---------------------------------------------------------------------------
# Disjoint bump family for the minimax lower bound


@dataclass(frozen=True)
class BumpFamily:
    """``(2k)^d`` bumps ``psi_m(x) = -C (2k)^(-nu) psi(2k x - m)`` on the cells of a 2k-grid.

    Each ``psi_m`` is supported in the ball inscribed in its grid cell and
    attains its minimum ``-C (2k)^(-nu)`` at the cell centre.
    """

    k: int
    d: int
    nu: float
    C: float
    domain: Box | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.domain is None:
            object.__setattr__(self, "domain", Box.unit(self.d))

    @property
    def size(self) -> int:
        return (2 * self.k) ** self.d

    @property
    def amplitude(self) -> float:
        return self.C * (2 * self.k) ** (-self.nu)

    def index(self, m: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(m, (2 * self.k,) * self.d))

    def member(self, m: int) -> BumpFunction:
        cell = np.asarray(self.index(m), dtype=float)
        n_cells = 2 * self.k
        center = self.domain.from_unit((cell + 0.5) / n_cells)
        radius = float(np.min(self.domain.width)) / (2 * n_cells)
        return BumpFunction(tuple(center), radius, -self.amplitude)

    @property
    def members(self) -> list:
        return [self.member(m) for m in range(self.size)]

    def cell_contains(self, m: int, x) -> np.ndarray:
        """Whether points lie in the open grid cell of member ``m``."""
        pts, _ = _batch(x, self.d)
        u = self.domain.to_unit(pts) * (2 * self.k)
        cell = np.asarray(self.index(m), dtype=float)
        return np.all((u > cell) & (u < cell + 1.0), axis=1)

    def untouched(self, points) -> int | None:
        """Lowest member index whose cell contains none of ``points``."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        for m in range(self.size):
            if len(pts) == 0 or not np.any(self.cell_contains(m, pts)):
                return m
        return None


def make_bump_family(k: int, d: int, nu: float, C: float, domain: Box | None = None) -> BumpFamily:
    return BumpFamily(k, d, float(nu), float(C), domain)


def objective_from_descriptor(desc: dict):
    """Rebuild an objective from its serialised descriptor."""
    kind = desc["type"]
    if kind == "span":
        return RkhsSpanFunction(KernelSpec.from_dict(desc["kernel"]), desc["centers"],
                                desc["weights"], desc.get("offset", 0.0))
    if kind == "counterexample":
        return CounterexamplePair(Box.from_dict(desc["domain"]), tuple(desc["center"]),
                                  desc["outer"], desc["inner"], desc["w_radius"])
    raise ValueError(f"unknown objective type {kind!r}")
