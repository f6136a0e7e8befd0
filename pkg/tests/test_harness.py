import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eiopt import Box, KernelSpec, ProtocolError, StrategyConfig
from eiopt.harness import (
    GRID_MIN_TOL,
    RegretRecord,
    adversarial_lower_bound,
    build_objective,
    constant_objective,
    divergence_experiment,
    exact_mesh_norm,
    fit_rate,
    grid_mesh_norm,
    load_config,
    mesh_norm,
    mesh_stats,
    normalized_mesh,
    random_mesh_experiment,
    run_trial,
    suite_objectives,
    trend_test,
    v0_initial_design,
)
from eiopt.harness.cli import main
from eiopt.harness.plot import plot_regret
from eiopt.funcspace import make_counterexample


# -- mesh norms ---------------------------------------------------------------


@pytest.mark.parametrize("exact", [True, False])
def test_mesh_norm_examples(exact):
    box1, box2 = Box.unit(1), Box.unit(2)
    assert mesh_norm([[0.5]], box1, exact=exact) == pytest.approx(0.5, abs=1e-12)
    assert mesh_norm([[0.25], [0.75]], box1, exact=exact) == pytest.approx(0.25, abs=1e-12)
    assert mesh_norm([[0.5, 0.5]], box2, exact=exact) == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_grid_mesh_norm_is_a_lower_bound_close_to_exact():
    rng = np.random.default_rng(0)
    for d in (1, 2):
        box = Box.unit(d)
        for _ in range(10):
            pts = rng.random((int(rng.integers(1, 30)), d))
            exact = exact_mesh_norm(pts, box)
            grid = grid_mesh_norm(pts, box)
            assert grid <= exact + 1e-12
            assert exact - grid <= 0.5 * math.sqrt(d) / (round(1e5 ** (1 / d)) - 1) + 1e-12


def test_exact_2d_matches_brute_force():
    rng = np.random.default_rng(1)
    pts = rng.random((12, 2))
    fine = grid_mesh_norm(pts, Box.unit(2), resolution=1501)
    assert exact_mesh_norm(pts, Box.unit(2)) == pytest.approx(fine, abs=1e-3)


def test_mesh_norm_rejects_tiny_grid_and_empty_design():
    with pytest.raises(ValueError):
        grid_mesh_norm([[0.5]], Box.unit(1), resolution=100)
    with pytest.raises(ValueError):
        mesh_norm(np.empty((0, 1)), Box.unit(1))
    with pytest.raises(ValueError):
        exact_mesh_norm([[0.5, 0.5, 0.5]], Box.unit(3))


def test_mesh_stats_non_increasing():
    pts = np.random.default_rng(2).random((40, 2))
    h = mesh_stats(pts, Box.unit(2)).mesh
    assert np.all(np.diff(h) <= 1e-15)
    h3 = mesh_stats(np.random.default_rng(3).random((15, 3)), Box.unit(3), resolution=11).mesh
    assert np.all(np.diff(h3) <= 0)


def test_uniform_design_mesh_percentile_d1():
    exp = random_mesh_experiment((100,), n_seeds=50, d=1, seed=0)
    assert exp.mesh_percentile95[0] < 0.15


def test_normalized_mesh_and_trend():
    assert normalized_mesh(0.1, 100, 1) == pytest.approx(0.1 * 100 / math.log(100))
    n = [10, 100, 1000]
    assert trend_test(n, [[1.0, 2.0, 3.0]] * 5) < 0.01
    assert trend_test(n, [[3.0, 2.0, 1.0]] * 5) > 0.99


# -- rates ---------------------------------------------------------------------


def test_fit_rate_on_exact_power_laws():
    n = np.arange(1, 501)
    assert fit_rate(n**-0.5) == pytest.approx(-0.5, abs=1e-12)
    assert fit_rate(5.0 / n) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_rate(np.ones(40))


def test_fit_rate_floors_zero_regret():
    r = np.full(500, 1e-3)
    r[300:] = 0.0
    assert fit_rate(r) < 0
    assert fit_rate(np.zeros(500)) == pytest.approx(0.0, abs=1e-12)
    assert GRID_MIN_TOL == 1e-6


# -- trials and records --------------------------------------------------------


def _fixed(theta=0.2, **kw):
    return StrategyConfig("ei_fixed", KernelSpec.matern("1/2", [theta]), **kw)


def test_constant_objective_has_zero_regret():
    rec = run_trial(_fixed(), constant_objective(Box.unit(1), 2.5), 20, seed=0)
    assert np.all(rec.regret == 0.0)
    rec.check()


def test_run_trial_is_deterministic():
    obj = suite_objectives(KernelSpec.matern("1/2", [0.2]), Box.unit(1), count=1)[0]
    a = run_trial(_fixed(), obj, 30, seed=4)
    b = run_trial(_fixed(), obj, 30, seed=4)
    assert a == b
    a.check()
    assert np.all(np.diff(a.rec_values) <= 0)


def test_run_trial_rejects_short_runs():
    with pytest.raises(ValueError):
        run_trial(_fixed(k_init=5), constant_objective(Box.unit(1)), 4, seed=0)


def test_run_trial_tags_strategy_errors_with_step():
    obj = constant_objective(Box.unit(1))
    bad = obj.__class__(lambda x: float("nan"), obj.domain, 0.0, {"type": "nan"})
    with pytest.raises((ProtocolError, ValueError)) as info:
        run_trial(_fixed(), bad, 5, seed=0)
    assert getattr(info.value, "step", 1) >= 1


def test_naive_trial_uses_interpolant_recommendation():
    cfg = StrategyConfig("naive", KernelSpec.matern("3/2", [0.2]))
    obj = suite_objectives(cfg.kernel, Box.unit(1), count=1)[0]
    rec = run_trial(cfg, obj, 12, seed=0)
    assert np.any(rec.rec_values != rec.running_best)
    assert np.all(rec.regret >= -GRID_MIN_TOL)


def test_record_csv_round_trip(tmp_path):
    obj = suite_objectives(KernelSpec.matern("1/2", [0.2, 0.3]), Box.unit(2), count=1)[0]
    rec = run_trial(StrategyConfig("ei_robust", obj.func.spec, theta_bounds=((0.05, 0.05), (0.5, 0.5))), obj, 12, seed=1)
    path = rec.write(tmp_path / "run.csv")
    back = RegretRecord.read(path)
    assert back == rec
    path.with_suffix(".json").unlink()
    bare = RegretRecord.read(path)
    assert np.array_equal(bare.points, rec.points)
    assert bare.min_value == pytest.approx(rec.min_value, abs=1e-12)


def test_record_check_detects_bad_runs():
    with pytest.raises(AssertionError):
        RegretRecord([[0.1], [0.2]], [1.0, 0.5], [1.0, 0.5], min_value=0.9).check()
    with pytest.raises(ValueError):
        RegretRecord([[0.1]], [1.0, 2.0], [1.0], 0.0)


def test_build_objective_variants():
    box = Box.unit(1)
    assert build_objective({"type": "constant", "value": 3.0}, box)([0.2]) == 3.0
    ce = build_objective({"type": "counterexample"}, box)
    assert ce.min_value == -1.0 and ce([0.5]) == pytest.approx(-1.0)
    bump = build_objective({"type": "bump", "center": [0.5], "radius": 0.1, "depth": -2.0}, box)
    assert bump.min_value == -2.0
    span = build_objective({"type": "span", "kernel": {"family": "matern", "nu": "1/2", "theta": [0.2]},
                            "centers": [[0.3]], "weights": [-1.0]}, box)
    assert span.min_value == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(ValueError):
        build_objective({"type": "nope"}, box)


# -- experiments ---------------------------------------------------------------


def test_adversary_small():
    res = adversarial_lower_bound(_fixed(k_init=1), 2, 0.5, 1.0)
    assert res.loss == pytest.approx(4**-0.5, abs=1e-9)
    assert res.n_observations == 1


def test_v0_initial_design_lies_in_v0():
    pair = make_counterexample(Box.unit(1))
    pts = v0_initial_design(pair, 5, 3)
    assert pts.shape == (5, 1) and np.all(pair.in_v0(pts))
    assert np.array_equal(pts, v0_initial_design(pair, 5, 3))


def test_divergence_experiment_small():
    res = divergence_experiment(n_steps=12, n_seeds=2)
    s = res.summary()
    assert s["n_seeds"] == 2
    assert s["separation"] == s["stuck_fraction_mle"] - s["stuck_fraction_robust"]
    assert len(res.seeds) == 2


# -- configuration and CLI -----------------------------------------------------


CONFIG = {
    "kernel": {"family": "matern", "nu": "1/2", "theta": [0.2]},
    "strategy": {"variant": "ei_fixed", "sigma": 1.0, "k_init": 3, "budget": 64},
    "objectives": [{"type": "span_suite", "index": 0, "count": 2, "seed": 1},
                   {"type": "span_suite", "index": 1, "count": 2, "seed": 1}],
    "steps": 20,
    "seeds": {"start": 0, "count": 2},
    "window": [5, 20],
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(CONFIG))
    return path


def test_load_config(config_path):
    cfg = load_config(config_path)
    assert cfg.seeds == (0, 1)
    assert cfg.strategy.k_init == 3 and cfg.strategy.variant == "ei_fixed"
    assert len(cfg.objectives()) == 2
    assert cfg.with_seed(7).seeds == (7,)
    with pytest.raises(ValueError):
        from eiopt.harness.config import from_dict

        from_dict({"steps": 3})


def test_plot_writes_svg(tmp_path):
    rec = run_trial(_fixed(), suite_objectives(KernelSpec.matern("1/2", [0.2]), Box.unit(1), count=1)[0],
                    60, seed=0)
    csv_path = rec.write(tmp_path / "r.csv")
    out = plot_regret([csv_path], tmp_path / "r.svg")
    assert out.read_text().lstrip().startswith("<?xml")


def test_cli_run_and_plot(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config_path), "--out", str(out), "--objective", "1"]) == 0
    csv_path = out / "run_ei_fixed_obj1_seed0.csv"
    rec = RegretRecord.read(csv_path)
    assert len(rec) == 20 and "final_mesh_norm" in rec.metadata
    assert main(["plot", str(csv_path), "--out", str(out), "--window", "5", "20"]) == 0
    assert (out / "regret.svg").exists()


def test_cli_uses_output_env(config_path, tmp_path, monkeypatch):
    monkeypatch.setenv("EIOPT_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["rates", str(config_path), "--save-runs"]) == 0
    payload = json.loads((tmp_path / "env" / "rates.json").read_text())
    assert len(payload["objectives"]) == 2
    assert (tmp_path / "env" / "rates.csv").read_text().count("\n") == 5
    assert len(list((tmp_path / "env" / "runs").glob("*.csv"))) == 4


def test_cli_diverge_small(tmp_path):
    assert main(["diverge", "--steps", "10", "--seeds", "2", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "diverge.json").read_text())
    assert len(payload["stuck_mle"]) == 2


def test_cli_adversary(tmp_path, capsys):
    assert main(["adversary", "--k", "1", "2", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "adversary.json").read_text())
    assert len(rows) == 4
    for row in rows:
        assert row["loss"] == pytest.approx(row["expected"], abs=1e-9)


def test_cli_mesh_small(tmp_path, capsys):
    assert main(["mesh", "--d", "1", "--n", "10", "100", "--seeds", "5", "--out", str(tmp_path)]) == 0
    assert "trend p-value" in capsys.readouterr().out
    rows = json.loads((tmp_path / "mesh.json").read_text())
    assert_allclose([r["n"] for r in rows["1"]["table"]], [10, 100])


def test_cli_reports_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
