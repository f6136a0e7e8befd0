import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.linalg import cholesky

from eiopt import (
    Box,
    DesignSet,
    KernelSpec,
    ProtocolError,
    RkhsSpanFunction,
    Strategy,
    StrategyConfig,
    estimate_theta_mle,
    fit,
    gram,
    naive_recommend,
    next_design_point,
    observe,
    recommend,
    robust_sigma,
)
from eiopt.funcspace import random_span
from eiopt.strategy import c_n_log, c_n_mle, standardize

M52 = KernelSpec.matern("5/2", [0.2])
BOUNDS = ((0.02,), (0.5,))


def drive(state, func, n):
    xs = []
    for _ in range(n):
        x = next_design_point(state)
        observe(state, x, func(x))
        xs.append(x)
    return np.array(xs)


def test_config_validation():
    with pytest.raises(ValueError):
        StrategyConfig("ucb", M52)
    with pytest.raises(ValueError):
        StrategyConfig("ei_fixed", M52, epsilon=1.5)
    with pytest.raises(ValueError):
        StrategyConfig("ei_fixed", M52, sigma=0.0)
    with pytest.raises(ValueError):
        StrategyConfig("ei_mle", M52)
    with pytest.raises(ValueError):
        StrategyConfig("ei_mle", M52, theta_bounds=((0.5,), (0.1,)))
    with pytest.raises(ValueError):
        StrategyConfig("ei_robust", M52, theta_bounds=BOUNDS, k_init=1)
    with pytest.raises(ValueError):
        StrategyConfig("ei_robust", M52, theta_bounds=((0.1, 0.1), (0.2, 0.2)))


def test_config_defaults_and_round_trip():
    cfg = StrategyConfig("ei_robust", KernelSpec.matern("3/2", [0.2, 0.2]), theta_bounds=((0.1, 0.1), (1, 1)))
    assert cfg.k_init == 10
    assert cfg.epsilon == 0.0
    assert StrategyConfig.from_dict(cfg.to_dict()) == cfg


def test_c_n_rules():
    assert c_n_mle(10) == 0.1
    assert c_n_log(2) == 0.5
    assert c_n_log(100) == pytest.approx(1 / (100 * math.log(100)))


def test_protocol_errors():
    s = Strategy(StrategyConfig("ei_fixed", M52), Box.unit(1), 0)
    with pytest.raises(ProtocolError):
        s.recommend()
    with pytest.raises(ProtocolError):
        s.observe([0.5], 1.0)
    x = s.next_design_point()
    with pytest.raises(ProtocolError):
        s.next_design_point()
    with pytest.raises(ProtocolError):
        s.observe(x + 0.1, 1.0)
    with pytest.raises(ValueError):
        s.observe(x, float("nan"))
    s.observe(x, 1.0)
    assert np.array_equal(s.recommend(), x)


def test_recommend_is_argmin_with_earliest_tie():
    s = Strategy(StrategyConfig("ei_fixed", M52, k_init=5), Box.unit(1), 1)
    vals = iter([3.0, 1.0, 2.0, 1.0, 5.0])
    xs = drive(s, lambda x: next(vals), 5)
    assert np.array_equal(recommend(s), xs[1])
    assert s.best_value == 1.0


def test_initial_points_ignore_observations():
    cfg = StrategyConfig("ei_fixed", M52, k_init=6)
    a = drive(Strategy(cfg, Box.unit(1), 4), lambda x: 0.0, 6)
    b = drive(Strategy(cfg, Box.unit(1), 4), lambda x: float(np.sin(40 * x[0])), 6)
    assert np.array_equal(a, b)


def test_naive_continues_sequence():
    cfg = StrategyConfig("naive", M52, k_init=2)
    a = drive(Strategy(cfg, Box.unit(1), 5), lambda x: 0.0, 40)
    b = drive(Strategy(cfg, Box.unit(1), 5), lambda x: float(x[0] ** 2), 40)
    assert np.array_equal(a, b)
    assert len(np.unique(a)) == 40


@pytest.mark.parametrize("variant", ["naive", "ei_fixed", "ei_mle", "ei_robust"])
def test_replay_is_bitwise_identical(variant):
    extra = {"theta_bounds": BOUNDS} if variant in ("ei_mle", "ei_robust") else {}
    cfg = StrategyConfig(variant, M52, epsilon=0.2, budget=64, **extra)
    f = random_span(M52, Box.unit(1), 6, np.random.default_rng(0))
    a = drive(Strategy(cfg, Box.unit(1), 11), f, 25)
    b = drive(Strategy(cfg, Box.unit(1), 11), f, 25)
    assert np.array_equal(a, b)


def test_robust_constant_data_is_uniform():
    cfg = StrategyConfig("ei_robust", M52, theta_bounds=BOUNDS, k_init=5)
    s = Strategy(cfg, Box.unit(1), 2)
    xs = drive(s, lambda x: 4.0, 1005)[5:, 0]
    counts, _ = np.histogram(xs, bins=20, range=(0, 1))
    assert stats.chisquare(counts).pvalue > 0.01
    assert s.last_sigma == 0.0 and s.last_theta == BOUNDS[1]


def test_epsilon_one_is_uniform():
    cfg = StrategyConfig("ei_fixed", M52, epsilon=1.0, k_init=1)
    s = Strategy(cfg, Box.unit(1), 3)
    xs = drive(s, lambda x: float(x[0]), 10_000)[1:, 0]
    counts, _ = np.histogram(xs, bins=20, range=(0, 1))
    assert stats.chisquare(counts).pvalue > 0.01
    assert s.last_source == "uniform"


def test_epsilon_fraction_of_random_steps():
    cfg = StrategyConfig("ei_fixed", M52, epsilon=0.3, k_init=2, budget=32)
    s = Strategy(cfg, Box.unit(1), 4)
    sources = []
    f = random_span(M52, Box.unit(1), 5, np.random.default_rng(1))
    for i in range(200):
        x = s.next_design_point()
        sources.append(s.last_source)
        s.observe(x, f(x))
    share = sources[2:].count("uniform") / 198
    assert 0.2 < share < 0.4


def test_ei_fixed_on_kernel_translate():
    spec = KernelSpec.matern("1/2", [0.2])
    f = RkhsSpanFunction(spec, [[0.5]], [1.0])
    s = Strategy(StrategyConfig("ei_fixed", spec, sigma=1.0, k_init=2), Box.unit(1), 5)
    fmin = min(f(0.0), f(1.0))
    regrets = []
    for n in range(1, 31):
        x = s.next_design_point()
        s.observe(x, f(x))
        assert s.n == n
        regrets.append(s.best_value - fmin)
    assert np.all(np.diff(regrets) <= 0)
    assert regrets[-1] >= 0


def gp_draw(theta, n, rng):
    spec = KernelSpec.matern("5/2", [theta])
    x = np.sort(rng.random(n))
    L = cholesky(gram(spec, x) + 1e-12 * np.eye(n), lower=True)
    return x, L @ rng.standard_normal(n)


def test_mle_recovers_length_scale():
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(50):
        x, z = gp_draw(0.15, 60, rng)
        (theta,) = estimate_theta_mle(DesignSet(x.reshape(-1, 1), z), M52, ((0.02,), (1.0,)))
        hits += 0.5 <= theta / 0.15 <= 2.0
    assert hits >= 40


def test_mle_degenerate_cases():
    rng = np.random.default_rng(8)
    x, z = gp_draw(0.15, 20, rng)
    d = DesignSet(x.reshape(-1, 1), z)
    assert estimate_theta_mle(d, M52, ((0.3,), (0.3,))) == (0.3,)
    assert estimate_theta_mle(d.with_values(np.full(20, 2.0)), M52, BOUNDS) == BOUNDS[1]
    with pytest.raises(ValueError):
        estimate_theta_mle(d.prefix(1), M52, BOUNDS)


def test_mle_stays_in_bounds_2d():
    rng = np.random.default_rng(9)
    spec = KernelSpec.matern("3/2", [0.3, 0.3])
    bounds = ((0.05, 0.1), (0.4, 0.8))
    d = DesignSet(rng.random((15, 2)), rng.standard_normal(15))
    theta = estimate_theta_mle(d, spec, bounds, grid=6)
    assert all(lo <= t <= hi for t, lo, hi in zip(theta, *bounds))


def test_robust_sigma_examples():
    spec = KernelSpec.matern("3/2", [0.2])
    pts = np.array([[0.4], [0.1], [0.7], [0.95]])
    assert robust_sigma(DesignSet(pts, [1.0] * 4), spec, (0.2,)) == 0.0
    f = RkhsSpanFunction(spec, [[0.4]], [1.0])
    sig = [robust_sigma(DesignSet(pts[:n], f(pts[:n])), spec, (0.2,)) for n in range(1, 5)]
    assert sig[-1] <= 1.0 + 1e-12
    assert np.all(np.diff(sig) >= -1e-12)


def test_naive_recommend_linear():
    d = DesignSet(np.array([[0.0], [0.5], [1.0]]), [0.0, 0.5, 1.0])
    x = naive_recommend(d, KernelSpec.matern("5/2", [0.3]), Box.unit(1))
    assert abs(x[0] - 0.0) <= 1e-2


def test_naive_recommend_constant_gap_zero():
    d = DesignSet(np.array([[0.1], [0.5], [0.9]]), [2.0, 2.0, 2.0])
    spec = KernelSpec.matern("5/2", [0.3])
    x = naive_recommend(d, spec, Box.unit(1))
    assert fit(spec, d).predict_mean(x) == pytest.approx(2.0, abs=1e-12)


def test_naive_recommend_needs_domain():
    with pytest.raises(ValueError):
        naive_recommend(DesignSet(np.array([[0.1]]), [1.0]), M52)


def test_standardize():
    assert_allclose(standardize([3.0, 1.0, 2.0]), [1.0, 0.0, 0.5])
    assert np.all(standardize([2.0, 2.0]) == 0)


def quantized(f):
    return lambda x: float(np.round(f(x) * 2**30) / 2**30)


def test_robust_scale_equivariance():
    f = quantized(random_span(M52, Box.unit(1), 6, np.random.default_rng(3)))
    cfg = StrategyConfig("ei_robust", M52, theta_bounds=BOUNDS, budget=128)
    a = drive(Strategy(cfg, Box.unit(1), 21), f, 40)
    b = drive(Strategy(cfg, Box.unit(1), 21), lambda x: 3.0 * f(x) + 7.0, 40)
    assert np.array_equal(a, b)


def test_fixed_is_not_scale_equivariant():
    f = quantized(random_span(M52, Box.unit(1), 6, np.random.default_rng(3)))
    cfg = StrategyConfig("ei_fixed", M52, budget=128)
    a = drive(Strategy(cfg, Box.unit(1), 21), f, 30)
    b = drive(Strategy(cfg, Box.unit(1), 21), lambda x: 3.0 * f(x) + 7.0, 30)
    assert not np.array_equal(a, b)


def test_mle_sigma_bound():
    lo, hi = 0.05, 0.4
    spec = KernelSpec.matern("3/2", [hi])
    f = random_span(spec, Box.unit(1), 5, np.random.default_rng(4), norm=2.0)
    S2 = f.norm**2 * hi / lo
    cfg = StrategyConfig("ei_mle", spec, theta_bounds=((lo,), (hi,)), budget=64, k_init=3)
    s = Strategy(cfg, Box.unit(1), 6)
    for _ in range(30):
        x = s.next_design_point()
        s.observe(x, f(x))
        if s.last_sigma is not None:
            assert lo <= s.last_theta[0] <= hi
            assert s.last_sigma**2 <= cfg.c_rule(s.n) * S2 * (1 + 1e-9)


def test_initial_design_override():
    cfg = StrategyConfig("ei_fixed", M52, k_init=2, budget=32)
    init = np.array([[0.1], [0.9]])
    xs = drive(Strategy(cfg, Box.unit(1), 0, initial_design=init), lambda x: float(x[0]), 4)
    assert np.array_equal(xs[:2], init)
    with pytest.raises(ValueError):
        Strategy(cfg, Box.unit(1), 0, initial_design=init[:1])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        Strategy(StrategyConfig("ei_fixed", M52), Box.unit(2), 0)
