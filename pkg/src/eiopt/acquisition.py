"""Closed-form expected improvement and its maximisation over a box."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import erfcx, ndtr

from .domain import Box, sobol_points
from .kernel import DUPLICATE_TOL, KernelSpec
from .posterior import PosteriorModel

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TAIL_SWITCH = -8.0

DEFAULT_BUDGET = 512
GOLDEN_TOL = 1e-6
GOLDEN_MAX_ITER = 50
#: Number of best candidates that receive local refinement.
N_REFINE = 8

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PriorParams:
    """Prior scale ``sigma`` and the correlation kernel (which carries theta)."""

    sigma: float
    spec: KernelSpec

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def _phi(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


_SERIES_SWITCH = 20.0
_SERIES_TERMS = 10
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


def _tau_left_tail(x):
    # With t = -x: tau = phi(t) (1 - t m(t)), m the Mills ratio via erfcx.
    # The bracket cancels to about 1/t^2, costing ~t^2 ulps, so far out we
    # switch to phi(t) (1/t^2 - 3/t^4 + 15/t^6 - ...), converged by 10 terms.
    t = -x
    out = _phi(t) * (1.0 - t * _SQRT_HALF_PI * erfcx(t / math.sqrt(2.0)))
    far = t > _SERIES_SWITCH
    if far.any():
        tf = t[far]
        inv = 1.0 / (tf * tf)
        term = inv
        total = inv.copy()
        for k in range(1, _SERIES_TERMS):
            term = -term * (2 * k + 1) * inv
            total += term
        out[far] = _phi(tf) * total
    return out


def tau(x):
    """``tau(x) = x Phi(x) + phi(x)``, accurate deep into the left tail."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x)
    out = flat * ndtr(flat) + _phi(flat)
    left = flat < _TAIL_SWITCH
    if left.any():
        out[left] = _tau_left_tail(flat[left])
    return out.reshape(x.shape) if x.ndim else float(out[0])


def rho(y, s):
    """``rho(y, s) = s tau(y/s)`` for ``s > 0`` and ``max(y, 0)`` for ``s = 0``."""
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    y, s = np.broadcast_arrays(y, s)
    if s.size and s.min() < 0:
        raise ValueError("s must be non-negative")
    out = np.array(np.maximum(y, 0.0), dtype=float)
    pos = s > 0
    if pos.all():
        out = s * np.asarray(tau(y / s))
    elif pos.any():
        out[pos] = s[pos] * tau(y[pos] / s[pos])
    return out if out.ndim else float(out)


def expected_improvement(model: PosteriorModel, params: PriorParams, x):
    """EI of observing at ``x`` (a point or an ``(m, d)`` batch)."""
    mean, sd = model.predict_centered(x)
    best = model.design.best_value - model.ref
    return rho(best - np.asarray(mean), params.sigma * np.asarray(sd))


def _batch_ei(model: PosteriorModel, params: PriorParams):
    """Vectorised EI on ``(m, d)`` arrays with the per-call checks hoisted out.

    The inner loop of the maximiser calls this a few dozen times per step, so
    it works directly from the model's cached factors.
    """
    best = model.design.best_value - model.ref
    sigma = params.sigma

    def ei(pts):
        mean, sd, _, _ = model._predict(pts)
        y = best - mean
        s = sigma * sd
        out = np.maximum(y, 0.0)
        pos = s > 0
        if pos.all():
            return s * tau(y / s)
        if pos.any():
            out[pos] = s[pos] * tau(y[pos] / s[pos])
        return out

    return ei


def _nearest_midpoints(design, domain: Box) -> np.ndarray:
    best = design.best_point
    others = np.delete(design.points, design.best_index, axis=0)
    if len(others) == 0:
        return np.empty((0, design.dim))
    scale = domain.width
    dist = np.linalg.norm((others - best) / scale, axis=1)
    k = min(2 * design.dim, len(others))
    nearest = others[np.argsort(dist, kind="stable")[:k]]
    return 0.5 * (nearest + best)


def _golden_refine(objective, starts, values, domain: Box, half_width):
    """Coordinate-wise batched golden-section search minimising ``objective``.

    Each start is searched one coordinate at a time inside
    ``[x_j - half_width_j, x_j + half_width_j]`` clipped to the box. Returns
    every evaluated point with its value so the caller can pick the best.
    """
    x = starts.copy()
    fx = values.copy()
    seen_x = [x.copy()]
    seen_f = [fx.copy()]
    lo_box, hi_box = domain.lo, domain.hi
    for j in range(domain.dim):
        a = np.maximum(x[:, j] - half_width[j], lo_box[j])
        b = np.minimum(x[:, j] + half_width[j], hi_box[j])

        def at(coord):
            pts = x.copy()
            pts[:, j] = coord
            return pts, objective(pts)

        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        # Bracket ends are candidates in their own right (box edges matter).
        m = len(x)
        first = np.tile(x, (4, 1))
        first[:, j] = np.concatenate([a, b, c, d])
        f_first = objective(first)
        seen_x += np.split(first, 4)
        seen_f += np.split(f_first, 4)
        fc, fd = f_first[2 * m:3 * m], f_first[3 * m:]
        for _ in range(GOLDEN_MAX_ITER):
            if np.all(b - a <= GOLDEN_TOL):
                break
            left = fc <= fd  # keep [a, d], else keep [c, b]
            a, b = np.where(left, a, c), np.where(left, d, b)
            probe = np.where(left, b - _GOLDEN * (b - a), a + _GOLDEN * (b - a))
            pp, fp = at(probe)
            seen_x.append(pp)
            seen_f.append(fp)
            c, d, fc, fd = (
                np.where(left, probe, d),
                np.where(left, c, probe),
                np.where(left, fp, fd),
                np.where(left, fc, fp),
            )
        all_x = np.concatenate(seen_x)
        all_f = np.concatenate(seen_f)
        per_start = all_f.reshape(-1, m)
        pick = np.argmin(per_start, axis=0)
        x = all_x.reshape(-1, m, domain.dim)[pick, np.arange(m)]
        fx = per_start[pick, np.arange(m)]
    return np.concatenate(seen_x), np.concatenate(seen_f)


def maximize_acquisition(acq, domain: Box, rng: np.random.Generator, budget: int = DEFAULT_BUDGET,
                         extra=None, n_refine: int = N_REFINE, reject=None):
    """Approximate global maximiser of a vectorised acquisition ``acq``.

    Candidates are ``budget`` scrambled Sobol' points plus ``extra``; the best
    ``n_refine`` of them are polished by coordinate-wise golden-section search.
    Returns ``(x, value)``; ties go to the lowest candidate index. If given,
    ``reject(points)`` flags points that may not be returned; the best
    admissible point is used instead.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    seed = int(rng.integers(2**63 - 1))
    cands = domain.from_unit(sobol_points(domain.dim, budget, seed))
    if extra is not None and len(extra):
        cands = np.vstack([cands, np.asarray(extra, dtype=float).reshape(-1, domain.dim)])
    vals = np.asarray(acq(cands), dtype=float)
    order = np.argsort(-vals, kind="stable")[:n_refine]
    half_width = 2.0 * domain.width * budget ** (-1.0 / domain.dim)
    pts, f = _golden_refine(lambda p: -np.asarray(acq(p), dtype=float), cands[order], -vals[order],
                            domain, half_width)
    all_x = np.vstack([cands, pts])
    all_v = np.concatenate([vals, -f])
    if reject is not None:
        all_v = np.where(reject(all_x), -np.inf, all_v)
    best = int(np.argmax(all_v))
    return all_x[best].copy(), float(all_v[best])


def _near_design(design, radius):
    pts = design.points
    radius = np.asarray(radius, dtype=float)

    def reject(cands):
        # Chebyshev distance in units of ``radius``, matching the duplicate rule.
        tree = cKDTree(pts / radius)
        dist, _ = tree.query(cands / radius, p=np.inf)
        return dist <= 1.0

    return reject


def maximize_ei(model: PosteriorModel, params: PriorParams, domain: Box, budget: int,
                rng: np.random.Generator, theta_max=None) -> np.ndarray:
    """Next design point: the (approximate) maximiser of expected improvement.

    If EI vanishes on every candidate, a uniform random point of ``domain`` is
    returned instead, so that constant data still lead to a dense design.
    Points that would count as duplicates of a design point under length-scales
    ``theta_max`` (default: the model's own) are never returned.
    """
    theta_max = params.spec.theta if theta_max is None else theta_max
    x, value = maximize_acquisition(
        _batch_ei(model, params),
        domain,
        rng,
        budget,
        extra=_nearest_midpoints(model.design, domain),
        reject=_near_design(model.design, DUPLICATE_TOL * np.asarray(theta_max, dtype=float)),
    )
    if not value > 0.0:
        return domain.uniform(rng)
    return x
