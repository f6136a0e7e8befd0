"""Stationary correlation kernels with anisotropic length-scales.

Two families are provided: Matérn with half-integer smoothness
(1/2, 3/2, 5/2, 7/2), evaluated through the closed forms that the
half-integer Bessel functions reduce to, and the Gaussian kernel. All
kernels are normalised so that ``K(0) = 1`` and are isotropic in the
rescaled coordinates ``t / theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DuplicatePointError, KernelConfigError

#: Scaled infinity-norm distance below which two points count as duplicates.
DUPLICATE_TOL = 1e-10

SUPPORTED_NU = (Fraction(1, 2), Fraction(3, 2), Fraction(5, 2), Fraction(7, 2))
_HALF, _THREE_HALVES, _FIVE_HALVES, _ = SUPPORTED_NU


def _parse_nu(nu) -> Fraction:
    if isinstance(nu, str):
        nu = Fraction(nu.strip())
    elif isinstance(nu, float):
        nu = Fraction(nu).limit_denominator(1000)
    else:
        nu = Fraction(nu)
    return nu


@dataclass(frozen=True)
class KernelSpec:
    """Correlation kernel family plus per-coordinate length-scales.

    Parameters
    ----------
    family : {"matern", "gaussian"}
    theta : sequence of float
        Length-scales, one per input dimension; all must be positive.
    nu : str, Fraction or float, optional
        Matérn smoothness. Required for ``family="matern"``; ignored for the
        Gaussian kernel.
    """

    family: str
    theta: tuple
    nu: Fraction | None = None

    def __post_init__(self):
        family = str(self.family).lower()
        if family not in ("matern", "gaussian"):
            raise KernelConfigError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", family)

        theta = tuple(float(t) for t in np.atleast_1d(np.asarray(self.theta, dtype=float)))
        if not theta:
            raise KernelConfigError("theta must have at least one entry")
        if not all(math.isfinite(t) and t > 0 for t in theta):
            raise KernelConfigError(f"length-scales must be positive, got {theta}")
        object.__setattr__(self, "theta", theta)

        if family == "matern":
            if self.nu is None:
                raise KernelConfigError("Matérn kernel needs a smoothness nu")
            nu = _parse_nu(self.nu)
            if nu <= 0:
                raise KernelConfigError(f"nu must be positive, got {nu}")
            if nu not in SUPPORTED_NU:
                raise KernelConfigError(
                    f"nu={nu} not supported; choose one of "
                    + ", ".join(str(v) for v in SUPPORTED_NU)
                )
            object.__setattr__(self, "nu", nu)
        else:
            object.__setattr__(self, "nu", None)

    @classmethod
    def matern(cls, nu, theta) -> "KernelSpec":
        return cls("matern", theta, nu)

    @classmethod
    def gaussian(cls, theta) -> "KernelSpec":
        return cls("gaussian", theta)

    @classmethod
    def from_dict(cls, cfg: dict) -> "KernelSpec":
        return cls(cfg["family"], tuple(cfg["theta"]), cfg.get("nu"))

    def to_dict(self) -> dict:
        out = {"family": self.family, "theta": list(self.theta)}
        if self.nu is not None:
            out["nu"] = str(self.nu)
        return out

    @property
    def dim(self) -> int:
        return len(self.theta)

    @property
    def smoothness(self) -> float:
        """The exponent governing the minimax rate; ``inf`` for Gaussian."""
        return math.inf if self.nu is None else float(self.nu)

    @property
    def log_exponent(self) -> float:
        """Log-factor exponent: 1/2 for integer Matérn smoothness, else 0."""
        if self.nu is not None and self.nu.denominator == 1:
            return 0.5
        return 0.0

    def with_theta(self, theta) -> "KernelSpec":
        return KernelSpec(self.family, tuple(theta), self.nu)


def eval_base(spec: KernelSpec, r, out=None):
    """Evaluate the isotropic base kernel at radius ``r >= 0``.

    Accepts scalars or arrays; returns the same shape. Passing ``out=r``
    overwrites the radii in place, which matters for large batches.
    """
    r = np.asarray(r, dtype=float)
    if r.size and r.min() < 0:
        raise ValueError("radius must be non-negative")
    if r.ndim == 0:
        return float(eval_base(spec, r.reshape(1))[0])
    if out is None:
        out = np.empty_like(r)
    if spec.family == "gaussian":
        np.multiply(r, r, out=out)
        out *= -0.5
        return np.exp(out, out=out)

    nu = spec.nu
    if nu == _HALF:
        np.negative(r, out=out)
        return np.exp(out, out=out)
    z = np.multiply(r, math.sqrt(2 * float(nu)))
    # Horner form of the polynomial factor, accumulated in ``out``.
    if nu == _THREE_HALVES:
        np.add(z, 1.0, out=out)
    elif nu == _FIVE_HALVES:
        np.multiply(z, 1.0 / 3.0, out=out)
        out += 1.0
        out *= z
        out += 1.0
    else:  # 7/2
        np.multiply(z, 1.0 / 15.0, out=out)
        out += 0.4
        out *= z
        out += 1.0
        out *= z
        out += 1.0
    np.negative(z, out=z)
    np.exp(z, out=z)
    out *= z
    return out


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        # A flat list is n scalar points when dim == 1, else a single point.
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {pts.shape[1]}")
    return pts


def eval_scaled(spec: KernelSpec, t):
    """Kernel value at offset ``t`` (a d-vector, or an array of them)."""
    t = np.asarray(t, dtype=float)
    if t.shape[-1:] != (spec.dim,) and not (spec.dim == 1 and t.ndim == 0):
        raise ValueError(f"offset has dimension {t.shape[-1:]}, kernel has {spec.dim}")
    scaled = np.atleast_1d(t) / np.asarray(spec.theta)
    return eval_base(spec, np.linalg.norm(scaled, axis=-1))


def scaled_distances(spec: KernelSpec, a, b) -> np.ndarray:
    """Euclidean distances between rows of ``a`` and ``b`` after theta-scaling."""
    theta = np.asarray(spec.theta)
    a = _as_points(a, spec.dim) / theta
    b = _as_points(b, spec.dim) / theta
    if spec.dim == 1:
        return np.abs(a[:, 0][:, None] - b[:, 0][None, :])
    return cdist(a, b)


def check_distinct(spec: KernelSpec, points, tol: float = DUPLICATE_TOL) -> None:
    """Raise :class:`DuplicatePointError` if two points coincide within ``tol``."""
    pts = _as_points(points, spec.dim) / np.asarray(spec.theta)
    n = len(pts)
    if n < 2:
        return
    if spec.dim == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        gaps = np.diff(pts[order, 0])
        bad = np.flatnonzero(gaps <= tol)
        if bad.size:
            i, j = sorted((int(order[bad[0]]), int(order[bad[0] + 1])))
            raise DuplicatePointError(i, j)
        return
    dist = cdist(pts, pts, metric="chebyshev")
    dist[np.tril_indices(n)] = np.inf
    hit = np.argwhere(dist <= tol)
    if hit.size:
        i, j = (int(v) for v in hit[0])
        raise DuplicatePointError(i, j)


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Correlation matrix ``V[i, j] = K_theta(x_i - x_j)``.

    Duplicated points are rejected since they make ``V`` singular and add no
    information to a noiseless model.
    """
    pts = _as_points(points, spec.dim)
    check_distinct(spec, pts)
    V = eval_base(spec, scaled_distances(spec, pts, pts))
    np.fill_diagonal(V, 1.0)
    return V


def cross(spec: KernelSpec, points, x) -> np.ndarray:
    """Cross-correlations ``K_theta(x - x_i)``.

    ``x`` may be a single d-vector (returns shape ``(n,)``) or an ``(m, d)``
    array (returns shape ``(n, m)``).
    """
    pts = _as_points(points, spec.dim)
    x_arr = np.asarray(x, dtype=float)
    single = x_arr.ndim == 0 or (x_arr.ndim == 1 and (spec.dim > 1 or x_arr.size == 1))
    if single and x_arr.size != spec.dim:
        raise ValueError(f"query point has dimension {x_arr.size}, kernel has {spec.dim}")
    q = _as_points(x_arr, spec.dim)
    out = eval_base(spec, scaled_distances(spec, pts, q))
    return out[:, 0] if single else out
