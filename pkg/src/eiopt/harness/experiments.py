"""The lower-bound adversary and the estimated-parameter divergence experiment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..domain import Box, SobolStream
from ..funcspace import BumpFamily, CounterexamplePair, make_counterexample
from ..kernel import KernelSpec
from ..strategy import Strategy, StrategyConfig, naive_recommend
from .objectives import counterexample_objective
from .trial import run_trial

# ---------------------------------------------------------------------------
# Adversary


@dataclass(frozen=True)
class AdversaryResult:
    loss: float
    expected: float
    member: int
    n_observations: int
    points: np.ndarray
    recommendation: np.ndarray


def _recommendation(state: Strategy, config: StrategyConfig, domain: Box, seed: int) -> np.ndarray:
    if state.n == 0:
        # No data at all: every strategy falls back to the centre of the box.
        return domain.center.copy()
    if config.variant == "naive":
        return naive_recommend(state.design, config.kernel, domain, config.budget, seed=(seed, state.n))
    return state.recommend()


def _drive(config: StrategyConfig, domain: Box, seed: int, func, n_obs: int, expect=None):
    state = Strategy(config, domain, seed)
    points = np.empty((n_obs, domain.dim))
    for i in range(n_obs):
        x = state.next_design_point()
        if expect is not None and not np.array_equal(x, expect[i]):
            raise AssertionError(f"replay diverged at step {i + 1}")
        points[i] = x
        state.observe(x, float(func(x)))
    return points, _recommendation(state, config, domain, seed)


def adversarial_lower_bound(config: StrategyConfig, k: int, nu: float, C: float, seed: int = 0,
                            domain: Box | None = None) -> AdversaryResult:
    """Loss forced on ``config`` by the disjoint bump family at scale ``k``.

    The strategy first runs on ``f = 0`` for ``(2k)^d / 2 - 1`` observations.
    A member whose grid cell holds neither a visited point nor the
    recommendation is then chosen, and the run is replayed on it with the same
    seed. The replay must visit the same points, so the loss is exactly the
    member's depth ``C (2k)^(-nu)``.
    """
    d = config.kernel.dim
    domain = domain or Box.unit(d)
    family = BumpFamily(k, d, float(nu), float(C), domain)
    n_obs = family.size // 2 - 1
    points, rec = _drive(config, domain, seed, lambda x: 0.0, n_obs)
    touched = np.vstack([points, rec.reshape(1, d)])
    m = family.untouched(touched)
    if m is None:
        raise RuntimeError("no untouched family member; the pigeonhole argument failed")
    psi = family.member(m)
    replay, rec_replay = _drive(config, domain, seed, psi, n_obs, expect=points)
    if not np.array_equal(rec, rec_replay):
        raise AssertionError("replayed recommendation differs")
    loss = float(psi(rec_replay)) - psi.depth
    return AdversaryResult(loss, family.amplitude, m, n_obs, replay, rec_replay)


# ---------------------------------------------------------------------------
# Divergence of EI with estimated parameters

#: Regret threshold defining a stuck run (the spike lowers the minimum by 1).
STUCK_DELTA = 1.0

DIVERGENCE_KERNEL = KernelSpec.matern("5/2", [0.1])
DIVERGENCE_THETA_BOUNDS = ((0.02,), (0.5,))


def v0_initial_design(pair: CounterexamplePair, k: int, seed) -> np.ndarray:
    """First ``k`` points of a scrambled Sobol' sequence lying in ``V0``.

    Starting inside the zero set of the plateau is the event under which
    estimated-parameter EI is expected to stall.
    """
    stream = SobolStream(pair.domain.dim, np.random.default_rng(seed))
    out = []
    while len(out) < k:
        x = pair.domain.from_unit(stream.next())
        if pair.in_v0(x)[0]:
            out.append(x)
    return np.array(out)


@dataclass(frozen=True)
class DivergenceResult:
    stuck_mle: np.ndarray  # per-seed booleans
    stuck_robust: np.ndarray
    regret_mle: np.ndarray  # final regret per seed
    regret_robust: np.ndarray
    delta: float = STUCK_DELTA
    min_g: float = -1.0
    seeds: list = field(default_factory=list)

    @property
    def fraction_mle(self) -> float:
        return float(np.mean(self.stuck_mle))

    @property
    def fraction_robust(self) -> float:
        return float(np.mean(self.stuck_robust))

    def summary(self) -> dict:
        return {
            "stuck_fraction_mle": self.fraction_mle,
            "stuck_fraction_robust": self.fraction_robust,
            "separation": self.fraction_mle - self.fraction_robust,
            "delta": self.delta,
            "min_g": self.min_g,
            "n_seeds": len(self.stuck_mle),
        }


def _stuck(pair: CounterexamplePair, record) -> bool:
    visited_w = bool(np.any(pair.in_w(record.points)))
    return (not visited_w) and bool(np.all(record.regret >= STUCK_DELTA))


def divergence_experiment(n_steps: int = 200, n_seeds: int = 50, seed: int = 0,
                          domain: Box | None = None, kernel: KernelSpec = DIVERGENCE_KERNEL,
                          theta_bounds=DIVERGENCE_THETA_BOUNDS, k_init: int = 5,
                          pair: CounterexamplePair | None = None, budget: int = 512) -> DivergenceResult:
    """Stuck fractions of ML-scaled EI and of robust EI on the spiked counterexample.

    A run is stuck when no design point enters the spike's support ``W`` and
    the regret never drops below ``STUCK_DELTA``. Both variants share each
    seed's initial design.
    """
    domain = domain or Box.unit(kernel.dim)
    pair = pair or make_counterexample(domain)
    objective = counterexample_objective(pair, spiked=True)
    common = dict(kernel=kernel, k_init=k_init, theta_bounds=theta_bounds, budget=budget)
    mle = StrategyConfig("ei_mle", c_n="n", **common)
    robust = StrategyConfig("ei_robust", **common)
    seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(n_seeds)]
    out = {"mle": ([], []), "robust": ([], [])}
    for s in seeds:
        init = v0_initial_design(pair, k_init, s)
        for name, cfg in (("mle", mle), ("robust", robust)):
            rec = run_trial(cfg, objective, n_steps, s, domain, initial_design=init)
            out[name][0].append(_stuck(pair, rec))
            out[name][1].append(float(rec.regret[-1]))
    return DivergenceResult(np.array(out["mle"][0]), np.array(out["robust"][0]),
                            np.array(out["mle"][1]), np.array(out["robust"][1]), seeds=seeds)
