"""Command-line entry point: ``eiopt <subcommand> ...``.

Results go to ``--out``, else ``$EIOPT_OUTPUT_DIR``, else ``./results``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from ..kernel import KernelSpec
from ..strategy import StrategyConfig
from .config import load_config
from .experiments import adversarial_lower_bound, divergence_experiment
from .mesh import mesh_stats, random_mesh_experiment
from .plot import plot_regret
from .rates import rate_sweep, slope_table
from .trial import run_trial

OUTPUT_ENV = "EIOPT_OUTPUT_DIR"

log = logging.getLogger("eiopt")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV) or "results")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path


def _config(args):
    cfg = load_config(args.config)
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    seed = cfg.seeds[0]
    obj = cfg.objectives()[args.objective]
    rec = run_trial(cfg.strategy, obj, cfg.steps, seed, cfg.domain)
    path = rec.write(_out_dir(args) / f"run_{cfg.strategy.variant}_obj{args.objective}_seed{seed}.csv")
    if cfg.domain.dim <= 2:
        rec.metadata["final_mesh_norm"] = float(mesh_stats(rec.points, cfg.domain).mesh[-1])
        rec.write(path)
    print(path)
    return 0


def cmd_rates(args) -> int:
    cfg = _config(args)
    objectives = cfg.objectives()
    result = rate_sweep(cfg.strategy, objectives, cfg.seeds, cfg.steps, cfg.window)
    out = _out_dir(args)
    rows = slope_table(result, objectives)
    with (out / "rates.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["objective", "seed", "slope"])
        for i in range(len(objectives)):
            for j, seed in enumerate(cfg.seeds):
                writer.writerow([i, seed, repr(float(result.slopes[i, j]))])
    _write_json(out / "rates.json", {"config": cfg.raw, "median_slope": result.median_slope,
                                     "objectives": rows})
    if args.save_runs:
        for rec in result.records:
            meta = rec.metadata
            rec.write(out / "runs" / f"obj{meta['objective'].get('index', 0)}_seed{meta['seed']}.csv")
    print(f"median slope {result.median_slope:.4f}")
    return 0


def cmd_diverge(args) -> int:
    kwargs = {}
    if args.config:
        kwargs.update(load_config(args.config).experiment)
    kwargs.update({k: v for k, v in (("n_steps", args.steps), ("n_seeds", args.seeds)) if v is not None})
    if args.seed is not None:
        kwargs["seed"] = args.seed
    result = divergence_experiment(**kwargs)
    summary = result.summary()
    summary["stuck_mle"] = result.stuck_mle.tolist()
    summary["stuck_robust"] = result.stuck_robust.tolist()
    _write_json(_out_dir(args) / "diverge.json", summary)
    print(json.dumps(result.summary()))
    return 0


def cmd_adversary(args) -> int:
    kernel = KernelSpec.matern(args.kernel_nu, [args.theta])
    rows = []
    for variant in args.variants:
        extra = {"k_init": 1} if variant == "ei_fixed" else {}
        config = StrategyConfig(variant, kernel, **extra)
        for k in args.k:
            res = adversarial_lower_bound(config, k, args.nu, args.C, seed=args.seed or 0)
            rows.append({"variant": variant, "k": k, "loss": res.loss, "expected": res.expected,
                         "member": res.member, "observations": res.n_observations})
            print(f"{variant:9s} k={k:<3d} loss={res.loss:.12g} expected={res.expected:.12g}")
    _write_json(_out_dir(args) / "adversary.json", rows)
    return 0


def cmd_mesh(args) -> int:
    rows = {}
    for d in args.d:
        exp = random_mesh_experiment(tuple(args.n), args.seeds, d, seed=args.seed or 0)
        rows[str(d)] = {"table": exp.table(), "trend_p_value": exp.p_value}
        for row in exp.table():
            print(f"d={d} n={row['n']:<6d} h95={row['h95']:.5f} normalized95={row['normalized95']:.4f}")
        print(f"d={d} trend p-value {exp.p_value:.4f}")
    _write_json(_out_dir(args) / "mesh.json", rows)
    return 0


def cmd_plot(args) -> int:
    out = Path(args.output) if args.output else _out_dir(args) / "regret.svg"
    print(plot_regret(args.csv, out, tuple(args.window)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eiopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("config", help="JSON experiment config")
        else:
            p.add_argument("--config", help="JSON config; its 'experiment' block supplies defaults")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./results)")

    p = sub.add_parser("run", help="single trial to CSV")
    common(p)
    p.add_argument("--objective", type=int, default=0, help="index into the configured objectives")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("rates", help="objective x seed sweep to a slope table")
    common(p)
    p.add_argument("--save-runs", action="store_true", help="also write every run's CSV")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("diverge", help="stuck fractions of ML-scaled vs robust EI")
    common(p, config_required=False)
    p.add_argument("--steps", type=int)
    p.add_argument("--seeds", type=int)
    p.set_defaults(func=cmd_diverge)

    p = sub.add_parser("adversary", help="loss forced by the disjoint bump family")
    common(p, config_required=False)
    p.add_argument("--variants", nargs="+", default=["naive", "ei_fixed"])
    p.add_argument("--k", type=int, nargs="+", default=[1, 2, 4])
    p.add_argument("--nu", type=float, default=0.5, help="exponent of the family amplitude")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--kernel-nu", default="1/2")
    p.add_argument("--theta", type=float, default=0.2)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("mesh", help="mesh norms of uniform random designs")
    common(p, config_required=False)
    p.add_argument("--d", type=int, nargs="+", default=[1, 2])
    p.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000])
    p.add_argument("--seeds", type=int, default=50)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("plot", help="CSV runs to a log-log SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("-o", "--output", help="SVG path (default <out>/regret.svg)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--window", type=int, nargs=2, default=[50, 500])
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
