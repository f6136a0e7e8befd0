"""Axis-aligned domain boxes and seeded low-discrepancy streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class Box:
    """Closed box ``prod_i [lower_i, upper_i]``."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must have the same, non-zero length")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"empty box: lower={lo}, upper={hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> "Box":
        return cls((0.0,) * d, (1.0,) * d)

    @classmethod
    def from_dict(cls, cfg) -> "Box":
        if isinstance(cfg, dict):
            return cls(tuple(cfg["lower"]), tuple(cfg["upper"]))
        # [[lo, hi], [lo, hi], ...]
        arr = np.asarray(cfg, dtype=float)
        return cls(tuple(arr[:, 0]), tuple(arr[:, 1]))

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def from_unit(self, u) -> np.ndarray:
        return self.lo + np.asarray(u, dtype=float) * self.width

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lo) / self.width

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=-1)

    def uniform(self, rng: np.random.Generator, size=None) -> np.ndarray:
        if size is None:
            return self.from_unit(rng.random(self.dim))
        return self.from_unit(rng.random((size, self.dim)))


class SobolStream:
    """Scrambled Sobol' sequence that can be drawn from one point at a time.

    Points are generated in power-of-two blocks so the balance properties of
    the underlying sequence are kept; the prefix is fixed by the seed.
    """

    def __init__(self, dim: int, seed):
        self._engine = qmc.Sobol(dim, scramble=True, seed=seed)
        self._buffer = np.empty((0, dim))
        self._pos = 0

    def _ensure(self, n: int) -> None:
        while len(self._buffer) < n:
            block = max(len(self._buffer), 16)
            self._buffer = np.vstack([self._buffer, self._engine.random(block)])

    def take(self, n: int = 1) -> np.ndarray:
        self._ensure(self._pos + n)
        out = self._buffer[self._pos:self._pos + n]
        self._pos += n
        return out.copy()

    def next(self) -> np.ndarray:
        return self.take(1)[0]


def sobol_points(dim: int, n: int, seed) -> np.ndarray:
    """``n`` scrambled Sobol' points in the unit cube (first ``n`` of a 2^m block)."""
    m = max(int(np.ceil(np.log2(max(n, 1)))), 0)
    return qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:n]
