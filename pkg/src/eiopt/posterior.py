"""Flat-mean Gaussian-process conditioning (ordinary kriging).

The predictor, its standard deviation and the reduced sum of squares are
all expressed through a lower Cholesky factor ``L`` of the correlation
matrix ``V`` together with the two solves ``p = L^{-1} 1`` and
``q = L^{-1} (z - z_0)``, values being taken relative to the first one:

* ``mu_hat = z_0 + p.q / p.p``
* ``rss = |q - (mu_hat - z_0) p|^2``
* ``f_hat(x) = mu_hat + v^T V^{-1} (z - mu_hat 1)``
* ``s^2(x) = 1 - |u|^2 + (1 - p.u)^2 / p.p`` with ``u = L^{-1} v``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.linalg.blas import dtrmm
from scipy.linalg.lapack import dtrtri
from scipy.spatial.distance import cdist

from .domain import Box
from .errors import DuplicatePointError, SingularDesignError
from .kernel import DUPLICATE_TOL, KernelSpec, check_distinct, eval_base, scaled_distances

JITTER = 1e-10
NEGATIVE_VARIANCE_WARN = -1e-8


def _as_query(x, dim):
    """Return ``(array (m, d), single)`` for a query point or batch."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar query for a {dim}-dimensional model")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dim == 1:
            return arr.reshape(-1, 1), arr.size == 1
        if arr.size != dim:
            raise ValueError(f"query has dimension {arr.size}, model has {dim}")
        return arr.reshape(1, dim), True
    if arr.shape[1] != dim:
        raise ValueError(f"query has dimension {arr.shape[1]}, model has {dim}")
    return arr, False


@dataclass(frozen=True)
class DesignSet:
    """Observed pairs ``(x_i, z_i)``.

    ``best_index`` is the lowest index attaining the minimum observed value.
    """

    points: np.ndarray
    values: np.ndarray
    domain: Box | None = None

    def __post_init__(self):
        values = np.atleast_1d(np.array(self.values, dtype=float))
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(len(values), -1) if len(values) else points.reshape(0, 1)
        if len(points) != len(values):
            raise ValueError(f"{len(points)} points but {len(values)} values")
        if len(values) == 0:
            raise ValueError("a design needs at least one observation")
        if self.domain is not None and not np.all(self.domain.contains(points, tol=1e-12)):
            raise ValueError("design point outside the domain box")
        points.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.values))  # argmin returns the first minimiser

    @property
    def best_value(self) -> float:
        return float(self.values[self.best_index])

    @property
    def best_point(self) -> np.ndarray:
        return self.points[self.best_index]

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def extended(self, x, z) -> "DesignSet":
        x = np.asarray(x, dtype=float).reshape(1, self.dim)
        return DesignSet(np.vstack([self.points, x]), np.append(self.values, float(z)), self.domain)

    def prefix(self, n: int) -> "DesignSet":
        return DesignSet(self.points[:n], self.values[:n], self.domain)

    def with_values(self, values) -> "DesignSet":
        return DesignSet(self.points, values, self.domain)


def _cholesky_with_jitter(V):
    try:
        return cholesky(V, lower=True, check_finite=False), 0.0
    except LinAlgError:
        pass
    try:
        return cholesky(V + JITTER * np.eye(len(V)), lower=True, check_finite=False), JITTER
    except LinAlgError as exc:
        raise SingularDesignError(f"correlation matrix of {len(V)} points is singular") from exc


@dataclass(frozen=True, eq=False)
class PosteriorModel:
    """A fitted flat-mean GP posterior; construct with :func:`fit`."""

    spec: KernelSpec
    design: DesignSet
    chol: np.ndarray
    _chol_inv: np.ndarray | None  # L^{-1}, built on demand; see chol_inv
    jitter: float
    ones_solve: np.ndarray  # L^{-1} 1
    data_solve: np.ndarray  # L^{-1} (z - ref)
    mu_hat: float
    weights: np.ndarray  # V^{-1} (z - mu_hat 1)
    rss: float
    # Values enter the solves relative to ``ref = z_0``, so the acquisition,
    # which only sees differences, is exactly shift invariant whenever those
    # differences are exact.
    ref: float = 0.0
    mu_centered: float = 0.0  # mu_hat - ref
    diagnostics: dict = field(default_factory=lambda: {"negative_variance": 0})

    @property
    def chol_inv(self) -> np.ndarray:
        """``L^{-1}``; predictions use it so they become plain products."""
        if self._chol_inv is None:
            Linv, info = dtrtri(self.chol, lower=1)
            if info:
                raise SingularDesignError("triangular inverse failed")
            object.__setattr__(self, "_chol_inv", np.tril(Linv))
        return self._chol_inv

    @property
    def _pp(self) -> float:
        return float(self.ones_solve @ self.ones_solve)

    @property
    def n(self) -> int:
        return len(self.design)

    @property
    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.chol))))

    # -- prediction -------------------------------------------------------

    def _distances(self, q):
        """Scaled distances as an ``(n, m)`` Fortran-ordered array."""
        cache = self.__dict__.get("_cache")
        if cache is None:
            theta = np.asarray(self.spec.theta)
            cache = {"theta": theta, "scaled": self.design.points / theta}
            object.__setattr__(self, "_cache", cache)
        qs = q / cache["theta"]
        if self.spec.dim == 1:
            dist = np.subtract.outer(qs[:, 0], cache["scaled"][:, 0])
            np.abs(dist, out=dist)
        else:
            dist = cdist(qs, cache["scaled"])
        return dist.T

    def _predict(self, q):
        """Centred mean ``f_hat - ref``, sd, and the design indices hit by ``q``."""
        dist = self._distances(q)
        hit = dist.min(axis=0) <= DUPLICATE_TOL
        idx = np.argmin(dist[:, hit], axis=0) if hit.any() else None
        # The kernel values, then their triangular solve, reuse one buffer.
        v = eval_base(self.spec, dist, out=dist)
        mean = self.mu_centered + self.weights @ v
        p = self.ones_solve
        u = dtrmm(1.0, self.chol_inv.T, v, lower=0, trans_a=1, overwrite_b=1)
        var = 1.0 - np.einsum("ij,ij->j", u, u) + (1.0 - p @ u) ** 2 / self._pp
        if var.min() < NEGATIVE_VARIANCE_WARN:
            self.diagnostics["negative_variance"] += int(np.count_nonzero(var < NEGATIVE_VARIANCE_WARN))
        sd = np.sqrt(np.maximum(var, 0.0))
        if idx is not None:
            # Queries that coincide with an observation get the exact noiseless answer.
            mean[hit] = self.design.values[idx] - self.ref
            sd[hit] = 0.0
        return mean, sd, hit, idx

    def predict(self, x):
        """Posterior mean and standard deviation (unit prior scale) at ``x``."""
        q, single = _as_query(x, self.spec.dim)
        mean, sd, hit, idx = self._predict(q)
        mean += self.ref
        if idx is not None:
            mean[hit] = self.design.values[idx]
        if single:
            return float(mean[0]), float(sd[0])
        return mean, sd

    def predict_centered(self, x):
        """As :meth:`predict`, with the mean reported relative to ``ref``."""
        q, single = _as_query(x, self.spec.dim)
        mean, sd, _, _ = self._predict(q)
        if single:
            return float(mean[0]), float(sd[0])
        return mean, sd

    def predict_mean(self, x):
        q, single = _as_query(x, self.spec.dim)
        dist = self._distances(q)
        mean = self.ref + (self.mu_centered + self.weights @ eval_base(self.spec, dist))
        hit = dist.min(axis=0) <= DUPLICATE_TOL
        if hit.any():
            mean[hit] = self.design.values[np.argmin(dist[:, hit], axis=0)]
        return float(mean[0]) if single else mean

    def predict_sd(self, x):
        return self.predict(x)[1]

    def reduced_ss(self) -> float:
        return self.rss

    # -- updating ---------------------------------------------------------

    def extend(self, x, z) -> "PosteriorModel":
        """Posterior after one more observation, via a Cholesky row append.

        Falls back to a full refit when the appended pivot is not positive.
        """
        x = np.asarray(x, dtype=float).reshape(1, self.spec.dim)
        design = self.design.extended(x, z)
        dist = scaled_distances(self.spec, self.design.points, x)[:, 0]
        scaled_x = x[0] / np.asarray(self.spec.theta)
        scaled_pts = self.design.points / np.asarray(self.spec.theta)
        cheb = np.max(np.abs(scaled_pts - scaled_x), axis=1)
        if np.any(cheb <= DUPLICATE_TOL):
            raise DuplicatePointError(int(np.argmin(cheb)), self.n)
        v = eval_base(self.spec, dist)
        row = self.chol_inv @ v
        pivot2 = 1.0 + self.jitter - row @ row
        if not pivot2 > 0.0:
            return fit(self.spec, design)
        pivot = np.sqrt(pivot2)
        n = self.n
        L = np.zeros((n + 1, n + 1))
        L[:n, :n] = self.chol
        L[n, :n] = row
        L[n, n] = pivot
        Linv = np.zeros((n + 1, n + 1))
        Linv[:n, :n] = self.chol_inv
        Linv[n, :n] = -(row @ self.chol_inv) / pivot
        Linv[n, n] = 1.0 / pivot
        p = np.append(self.ones_solve, (1.0 - row @ self.ones_solve) / pivot)
        qz = np.append(self.data_solve, ((float(z) - self.ref) - row @ self.data_solve) / pivot)
        return _assemble(self.spec, design, L, Linv, self.jitter, p, qz, self.ref)


def _assemble(spec, design, L, Linv, jitter, p, qz, ref) -> PosteriorModel:
    mu_c = float(p @ qz / (p @ p))
    resid = qz - mu_c * p
    weights = solve_triangular(L, resid, lower=True, trans="T", check_finite=False)
    rss = float(max(resid @ resid, 0.0))
    return PosteriorModel(spec, design, L, Linv, jitter, p, qz, ref + mu_c, weights, rss, ref, mu_c)


def fit(spec: KernelSpec, design: DesignSet) -> PosteriorModel:
    """Condition the flat-mean GP with kernel ``spec`` on ``design``."""
    if design.dim != spec.dim:
        raise ValueError(f"design dimension {design.dim} does not match kernel dimension {spec.dim}")
    check_distinct(spec, design.points)
    V = eval_base(spec, scaled_distances(spec, design.points, design.points))
    return fit_gram(spec, design, V)


def fit_gram(spec: KernelSpec, design: DesignSet, V: np.ndarray) -> PosteriorModel:
    """As :func:`fit` for a precomputed correlation matrix (no duplicate check)."""
    np.fill_diagonal(V, 1.0)
    L, jitter = _cholesky_with_jitter(V)
    ones = np.ones(len(design))
    p = solve_triangular(L, ones, lower=True, check_finite=False)
    ref = float(design.values[0])
    qz = solve_triangular(L, design.values - ref, lower=True, check_finite=False)
    return _assemble(spec, design, L, None, jitter, p, qz, ref)


def predict_mean(model: PosteriorModel, x):
    return model.predict_mean(x)


def predict_sd(model: PosteriorModel, x):
    return model.predict_sd(x)


def reduced_ss(model: PosteriorModel) -> float:
    return model.reduced_ss()
