"""Sequential design strategies built on expected improvement.

Four base variants are supported:

``naive``
    A fixed scrambled Sobol' sequence; recommendations minimise the
    interpolant (see :func:`naive_recommend`).
``ei_fixed``
    EI with fixed prior scale ``sigma`` and length-scales.
``ei_mle``
    EI with length-scales from a concentrated-likelihood grid search and
    ``sigma_hat^2 = c_n * R_hat^2``.
``ei_robust``
    As ``ei_mle`` but with ``sigma_hat^2 = R_hat^2``; constant data trigger
    uniform random exploration.

Any variant can be wrapped epsilon-greedily via ``StrategyConfig.epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .acquisition import DEFAULT_BUDGET, PriorParams, maximize_acquisition, maximize_ei
from .domain import Box, SobolStream
from .errors import ProtocolError, SingularDesignError
from .kernel import KernelSpec, check_distinct, eval_base
from .posterior import DesignSet, fit, fit_gram

VARIANTS = ("naive", "ei_fixed", "ei_mle", "ei_robust")
ESTIMATING = ("ei_mle", "ei_robust")


def c_n_log(n: int) -> float:
    """Default decay ``1 / (n max(1, log n))``."""
    return 1.0 / (n * max(1.0, math.log(n)))


def c_n_mle(n: int) -> float:
    """Plain maximum-likelihood decay ``1 / n``."""
    return 1.0 / n


C_N_RULES = {"n_log_n": c_n_log, "n": c_n_mle}


@dataclass(frozen=True)
class StrategyConfig:
    """Everything that determines a strategy apart from the seed.

    ``kernel`` fixes the family (and, for ``naive``/``ei_fixed``, the
    length-scales). Estimating variants search ``theta`` on a log-uniform grid
    of ``mle_grid`` points per dimension between ``theta_bounds``.
    """

    variant: str
    kernel: KernelSpec
    epsilon: float = 0.0
    k_init: int | None = None
    sigma: float = 1.0
    c_n: str = "n_log_n"
    theta_bounds: tuple | None = None
    mle_grid: int = 16
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        k_init = 5 * self.kernel.dim if self.k_init is None else int(self.k_init)
        object.__setattr__(self, "k_init", k_init)
        if k_init < 1:
            raise ValueError("k_init must be positive")
        if self.variant == "ei_fixed" and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.c_n not in C_N_RULES:
            raise ValueError(f"c_n must be one of {sorted(C_N_RULES)}")
        if self.variant in ESTIMATING:
            if k_init < 2:
                raise ValueError("estimating variants need k_init >= 2")
            if self.theta_bounds is None:
                raise ValueError(f"{self.variant} needs theta_bounds")
            lo, hi = (tuple(float(v) for v in np.atleast_1d(b)) for b in self.theta_bounds)
            if len(lo) != self.kernel.dim or len(hi) != self.kernel.dim:
                raise ValueError("theta_bounds must match the kernel dimension")
            if any(l <= 0 or l > h for l, h in zip(lo, hi)):
                raise ValueError("theta_bounds need 0 < lower <= upper componentwise")
            object.__setattr__(self, "theta_bounds", (lo, hi))
            if self.mle_grid < 1:
                raise ValueError("mle_grid must be positive")

    @property
    def c_rule(self):
        return C_N_RULES[self.c_n]

    @classmethod
    def from_dict(cls, cfg: dict) -> "StrategyConfig":
        cfg = dict(cfg)
        cfg["kernel"] = KernelSpec.from_dict(cfg["kernel"])
        if cfg.get("theta_bounds") is not None:
            cfg["theta_bounds"] = tuple(tuple(b) for b in cfg["theta_bounds"])
        return cls(**cfg)

    def to_dict(self) -> dict:
        out = {
            "variant": self.variant,
            "kernel": self.kernel.to_dict(),
            "epsilon": self.epsilon,
            "k_init": self.k_init,
            "sigma": self.sigma,
            "c_n": self.c_n,
            "theta_bounds": None if self.theta_bounds is None else [list(b) for b in self.theta_bounds],
            "mle_grid": self.mle_grid,
            "budget": self.budget,
        }
        return out

    def with_(self, **changes) -> "StrategyConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Parameter estimation


def _theta_grid(bounds, grid: int):
    lo, hi = (np.log(np.asarray(b, dtype=float)) for b in bounds)
    axes = [np.exp(np.linspace(l, h, grid)) if h > l else np.array([math.exp(l)]) for l, h in zip(lo, hi)]
    return [tuple(t) for t in product(*axes)]


def concentrated_loglik(model) -> float:
    """``-n log R_hat^2 - log det V``, up to constants and a factor 1/2."""
    return -model.n * math.log(model.rss) - model.log_det


def _mle_search(design: DesignSet, family: KernelSpec, bounds, grid: int):
    lo, hi = bounds
    if design.is_constant:
        spec = family.with_theta(hi)
        return tuple(hi), fit(spec, design)
    # Duplicates under the largest length-scales are duplicates under all.
    check_distinct(family.with_theta(hi), design.points)
    pts = design.points
    diffs = [np.abs(pts[:, j][:, None] - pts[:, j][None, :]) for j in range(design.dim)]
    best = None
    for theta in _theta_grid(bounds, grid):
        spec = family.with_theta(theta)
        if design.dim == 1:
            r = diffs[0] / theta[0]
        else:
            r = np.sqrt(sum((dj / t) ** 2 for dj, t in zip(diffs, theta)))
        try:
            model = fit_gram(spec, design, eval_base(spec, r, out=r))
        except SingularDesignError:
            continue
        if not model.rss > 0:
            continue
        ll = concentrated_loglik(model)
        # '>=' lets later (larger) grid points win ties.
        if best is None or ll >= best[0]:
            best = (ll, theta, model)
    if best is None:
        raise SingularDesignError("likelihood could not be evaluated at any grid point")
    return best[1], best[2]


def estimate_theta_mle(design: DesignSet, family: KernelSpec, bounds, grid: int = 16) -> tuple:
    """Length-scales maximising the concentrated likelihood on a log grid.

    Constant data give the upper bound; ties go to the largest ``theta``.
    """
    if len(design) < 2:
        raise ValueError("need at least two observations")
    return _mle_search(design, family, bounds, grid)[0]


def robust_sigma(design: DesignSet, family: KernelSpec, theta) -> float:
    """``sqrt(R_hat^2(theta))``: the native-norm estimate used as prior scale."""
    return math.sqrt(fit(family.with_theta(theta), design).rss)


def naive_recommend(design: DesignSet, spec: KernelSpec, domain: Box | None = None,
                    budget: int = DEFAULT_BUDGET, seed: int = 0) -> np.ndarray:
    """Approximate minimiser of the interpolant ``f_hat`` over the domain.

    Unlike :meth:`Strategy.recommend`, the result need not be a design point.
    """
    domain = domain or design.domain
    if domain is None:
        raise ValueError("a domain box is required")
    model = fit(spec, design)
    x, _ = maximize_acquisition(lambda p: -np.asarray(model.predict_mean(p)), domain,
                                np.random.default_rng(seed), budget, extra=design.points)
    return x


def standardize(values) -> np.ndarray:
    """Map observations affinely onto ``[0, 1]``; constant data map to 0."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


# ---------------------------------------------------------------------------
# The sequential state


@dataclass
class Strategy:
    """Mutable state of one strategy run.

    Drive it with ``x = next_design_point(); observe(x, f(x))`` and query
    :meth:`recommend` at any time. The point sequence depends only on the
    config, the seed and the observed values.
    """

    config: StrategyConfig
    domain: Box
    seed: int
    initial_design: np.ndarray | None = None
    design: DesignSet | None = field(default=None, init=False)
    last_theta: tuple | None = field(default=None, init=False)
    last_sigma: float | None = field(default=None, init=False)
    last_source: str | None = field(default=None, init=False)

    def __post_init__(self):
        if self.domain.dim != self.config.kernel.dim:
            raise ValueError("domain and kernel dimensions differ")
        ss = np.random.SeedSequence(self.seed)
        init_ss, acq_ss, coin_ss, unif_ss = ss.spawn(4)
        self._sequence = SobolStream(self.domain.dim, np.random.default_rng(init_ss))
        self._acq_rng = np.random.default_rng(acq_ss)
        self._coin_rng = np.random.default_rng(coin_ss)
        self._unif_rng = np.random.default_rng(unif_ss)
        if self.initial_design is not None:
            init = np.asarray(self.initial_design, dtype=float).reshape(-1, self.domain.dim)
            if len(init) < self.config.k_init:
                raise ValueError("initial_design has fewer than k_init points")
            self.initial_design = init
        self._pending = None
        self._model = None  # incrementally updated model for fixed-theta variants

    @property
    def n(self) -> int:
        return 0 if self.design is None else len(self.design)

    # -- protocol ----------------------------------------------------------

    def next_design_point(self) -> np.ndarray:
        if self._pending is not None:
            raise ProtocolError("next_design_point called twice without observe")
        x = self._choose()
        self._pending = np.array(x, dtype=float)
        return self._pending.copy()

    def observe(self, x, z) -> None:
        if self._pending is None:
            raise ProtocolError("observe called without a pending design point")
        x = np.asarray(x, dtype=float).reshape(self.domain.dim)
        if not np.array_equal(x, self._pending):
            raise ProtocolError("observed point differs from the proposed design point")
        z = float(z)
        if not math.isfinite(z):
            raise ValueError("observations must be finite")
        self._pending = None
        if self.design is None:
            self.design = DesignSet(x.reshape(1, -1), [z], self.domain)
        else:
            self.design = self.design.extended(x, z)
        if self._model is not None:
            self._model = self._model.extend(x, z)

    def recommend(self) -> np.ndarray:
        """The observed point with the lowest value (earliest on ties)."""
        if self.design is None:
            raise ProtocolError("no observations yet")
        return self.design.best_point.copy()

    @property
    def best_value(self) -> float:
        if self.design is None:
            raise ProtocolError("no observations yet")
        return self.design.best_value

    # -- point selection ----------------------------------------------------

    def _initial_point(self, i: int) -> np.ndarray:
        if self.initial_design is not None and i < len(self.initial_design):
            return self.initial_design[i]
        return self.domain.from_unit(self._sequence.next())

    def _uniform(self) -> np.ndarray:
        self.last_source = "uniform"
        return self.domain.uniform(self._unif_rng)

    def _choose(self) -> np.ndarray:
        cfg = self.config
        n = self.n
        if cfg.variant == "naive" or n < cfg.k_init:
            self.last_source = "initial"
            return self._initial_point(n)
        if cfg.epsilon > 0.0 and self._coin_rng.random() < cfg.epsilon:
            return self._uniform()
        self.last_source = "ei"
        if cfg.variant == "ei_fixed":
            if self._model is None:
                self._model = fit(cfg.kernel, self.design)
            self.last_theta, self.last_sigma = cfg.kernel.theta, cfg.sigma
            return maximize_ei(self._model, PriorParams(cfg.sigma, cfg.kernel), self.domain,
                               cfg.budget, self._acq_rng)
        return self._choose_estimated()

    def _choose_estimated(self) -> np.ndarray:
        cfg = self.config
        design = self.design
        if design.is_constant:
            self.last_theta, self.last_sigma = tuple(cfg.theta_bounds[1]), 0.0
            return self._uniform()
        # EI under estimated parameters is invariant to affine rescaling of z,
        # so work on standardised values; results then do not depend on it.
        scale = float(design.values.max() - design.values.min())
        std_design = design.with_values(standardize(design.values))
        theta, model = _mle_search(std_design, cfg.kernel, cfg.theta_bounds, cfg.mle_grid)
        rss = model.rss
        if cfg.variant == "ei_mle":
            sigma2 = cfg.c_rule(len(design)) * rss
        else:
            sigma2 = rss
        self.last_theta = tuple(theta)
        self.last_sigma = math.sqrt(sigma2) * scale
        params = PriorParams(math.sqrt(sigma2), model.spec)
        # Guard against near-duplicates under every admissible theta, not just theta_hat.
        return maximize_ei(model, params, self.domain, cfg.budget, self._acq_rng,
                           theta_max=cfg.theta_bounds[1])


def next_design_point(state: Strategy) -> np.ndarray:
    return state.next_design_point()


def observe(state: Strategy, x, z) -> Strategy:
    state.observe(x, z)
    return state


def recommend(state: Strategy) -> np.ndarray:
    return state.recommend()
