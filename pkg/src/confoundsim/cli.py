"""Command-line interface.

Subcommands: ``gen-baseline``, ``run``, ``resume``, ``figures`` and
``validate-config``. Exit codes: 0 success, 2 configuration error, 3 runtime
failure or failed-estimate budget exceeded.
"""

from __future__ import annotations

import argparse
import fnmatch
import sys
import time
from dataclasses import replace
from pathlib import Path

from .baseline import BaselineGenParams, generate_with_diagnostics
from .config import parse_config
from .defaults import BASELINE_SEED
from .errors import ConfigError, EmptyResults, SimError
from .figures import emit_figure_data
from .harness import FAILURE_BUDGET, RunManifest, run_grid
from .metrics import read_results_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def apply_overrides(m: RunManifest, iters=None, seed=None, workers=None, out=None,
                    scenario_filter=None) -> RunManifest:
    scenarios = list(m.scenarios)
    if scenario_filter:
        scenarios = [s for s in scenarios if fnmatch.fnmatch(s.scenario_id, scenario_filter)]
        if not scenarios:
            raise ConfigError(f"--scenario-filter {scenario_filter!r} matches no scenario")
    if iters is not None:
        scenarios = [replace(s, iters=iters) for s in scenarios]
    if seed is not None:
        scenarios = [replace(s, master_seed=seed) for s in scenarios]
    return replace(m, scenarios=tuple(scenarios), iters=None,
                   master_seed=m.master_seed if seed is None else seed,
                   workers=m.workers if workers is None else workers,
                   out_dir=m.out_dir if out is None else str(out))


def _load_manifest(args) -> RunManifest:
    m = parse_config(args.config)
    return apply_overrides(m, iters=args.iters, seed=args.seed, workers=args.workers,
                           out=args.out, scenario_filter=args.scenario_filter)


def cmd_gen_baseline(args) -> int:
    params = BaselineGenParams()
    seed = BASELINE_SEED
    if args.config:
        m = parse_config(args.config)
        params, seed = m.baseline_params, m.baseline_seed
    if args.seed is not None:
        seed = args.seed
    panel, diag = generate_with_diagnostics(params, seed)
    out = Path(args.out or "baseline.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    panel.to_csv(out)
    print(f"wrote {out}: {panel.n_units} units x {panel.n_years} years, seed {seed}, "
          f"mean rate {panel.outcome.mean():.3f}, truncated cells {diag['n_truncated']}")
    return EXIT_OK


def _run(args, resume: bool) -> int:
    m = _load_manifest(args)
    if m.out_dir is None:
        m = replace(m, out_dir="results")
    if resume and not (Path(m.out_dir) / "checkpoints").is_dir():
        raise ConfigError(f"nothing to resume in {m.out_dir}")
    t0 = time.time()

    def progress(sc, rows):
        print(f"  {sc.scenario_id}: {sc.iters} iterations, "
              + ", ".join(f"{r.method} failed {r.n_failed}" for r in rows), flush=True)

    print(f"{len(m.scenarios)} scenario(s), seed {m.master_seed}, {m.workers} worker(s) -> {m.out_dir}")
    res = run_grid(m, resume=resume, on_scenario_done=progress)
    emit_figure_data(res.rows, m.out_dir)
    if res.loaded:
        print(f"restored from checkpoints: {', '.join(res.loaded)}")
    print(f"{len(res.rows)} result rows in {time.time() - t0:.1f}s; "
          f"failed-estimate rate {res.failure_rate:.2%}")
    if res.over_budget():
        print(f"error: failed-estimate rate above the {FAILURE_BUDGET:.0%} budget", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_run(args) -> int:
    return _run(args, resume=False)


def cmd_resume(args) -> int:
    return _run(args, resume=True)


def cmd_figures(args) -> int:
    src = Path(args.results)
    if src.is_dir():
        src = src / "results.csv"
    try:
        rows = read_results_csv(src)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read results {src}: {exc}") from None
    if not rows:
        raise EmptyResults(f"{src} has no result rows")
    out = args.out or src.parent
    emit_figure_data(rows, out)
    print(f"wrote 5 figure files to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    m = _load_manifest(args)
    ids = [s.scenario_id for s in m.scenarios]
    n_est = sum(len(s.methods) for s in m.scenarios)
    print(f"ok: {len(ids)} scenario(s), {n_est} scenario x method cells, seed {m.master_seed}")
    for s in m.scenarios:
        print(f"  {s.scenario_id:32s} iters={s.iters} methods={','.join(s.methods)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confoundsim",
                                     description="Monte Carlo study of policy-effect estimators under confounding")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML run configuration")
        p.add_argument("--iters", type=int, help="iterations per scenario (overrides the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", help="output directory")
        p.add_argument("--scenario-filter", help="glob on scenario ids, e.g. 'linear-level-*'")

    p = sub.add_parser("gen-baseline", help="write a synthetic baseline panel to CSV")
    p.add_argument("--config", help="take generator parameters from this config")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--out", help="CSV path (default baseline.csv)")
    p.set_defaults(func=cmd_gen_baseline)

    p = sub.add_parser("run", help="run the scenario grid")
    run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue an interrupted run from its checkpoints")
    run_flags(p)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("figures", help="write figure JSON files from a results CSV")
    p.add_argument("--results", required=True, help="results CSV or the run directory")
    p.add_argument("--out", help="output directory (default: next to the CSV)")
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("validate-config", help="check a config and list its scenarios")
    run_flags(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "iters", None) is not None and args.iters < 1:
        print("error: --iters must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
