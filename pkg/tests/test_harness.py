import json
import random

import pytest

from confoundsim.baseline import generate_synthetic_baseline
from confoundsim.defaults import BASELINE_SEED
from confoundsim.dgp import ScenarioConfig
from confoundsim.errors import ConfigError, ResumeMismatch
from confoundsim.harness import (
    IterationResult,
    RunManifest,
    checkpoint_path,
    iteration_rng,
    run_grid,
    run_iterations,
    run_scenario,
    summarize_iterations,
)


@pytest.fixture(scope="module")
def baseline():
    return generate_synthetic_baseline(seed=BASELINE_SEED)


def test_single_iteration_smoke(baseline):
    rows = run_scenario(ScenarioConfig(iters=1), baseline)
    assert [r.method for r in rows] == ["twfe", "ar", "ascm", "csa"]
    assert all(r.n_iters + r.n_failed == 1 for r in rows)


def test_iteration_stream_is_pure():
    a = iteration_rng(5, "linear-level-small-null", 3).random(4)
    b = iteration_rng(5, "linear-level-small-null", 3).random(4)
    c = iteration_rng(5, "linear-level-small-null", 4).random(4)
    d = iteration_rng(5, "linear-trend-small-null", 3).random(4)
    assert (a == b).all()
    assert not (a == c).any() and not (a == d).any()


def test_workers_do_not_change_results(baseline):
    sc = ScenarioConfig(magnitude="medium", iters=6)
    serial = run_iterations(sc, baseline, 17, workers=1)
    parallel = run_iterations(sc, baseline, 17, workers=3)
    assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]


def test_aggregation_ignores_completion_order(baseline):
    sc = ScenarioConfig(magnitude="small", iters=5)
    results = run_iterations(sc, baseline, 3)
    shuffled = list(results)
    random.Random(0).shuffle(shuffled)
    assert summarize_iterations(sc, results) == summarize_iterations(sc, shuffled)


def test_iteration_result_round_trip(baseline):
    (r,) = run_iterations(ScenarioConfig(iters=1), baseline, 8)
    again = IterationResult.from_dict(json.loads(json.dumps(r.to_dict())))
    assert again.to_dict() == r.to_dict()


def test_adding_scenarios_leaves_others_alone(baseline, tmp_path):
    a = ScenarioConfig(magnitude="small", iters=3, methods=("twfe", "ar"))
    b = ScenarioConfig(confounder_mode="trend", iters=3, methods=("twfe", "ar"))
    one = run_grid(RunManifest(scenarios=(a,)), baseline=baseline)
    two = run_grid(RunManifest(scenarios=(b, a)), baseline=baseline)
    keep = [r for r in two.rows if r.confounding_type == "levels"]
    assert keep == one.rows


def test_empty_manifest():
    with pytest.raises(ConfigError):
        RunManifest(scenarios=())
    sc = ScenarioConfig()
    with pytest.raises(ConfigError):
        RunManifest(scenarios=(sc, sc))


class Interrupt(Exception):
    pass


def test_interrupt_and_resume(baseline, tmp_path):
    scs = (ScenarioConfig(magnitude="small", iters=3), ScenarioConfig(magnitude="large", iters=3))
    full = run_grid(RunManifest(scenarios=scs, out_dir=str(tmp_path / "full")), baseline=baseline)

    m = RunManifest(scenarios=scs, out_dir=str(tmp_path / "cut"))

    def stop(sc, rows):
        raise Interrupt

    with pytest.raises(Interrupt):
        run_grid(m, baseline=baseline, on_scenario_done=stop)
    assert checkpoint_path(m.out_dir, scs[0]).exists()
    assert not checkpoint_path(m.out_dir, scs[1]).exists()
    resumed = run_grid(m, resume=True, baseline=baseline)
    assert resumed.loaded == [scs[0].scenario_id]
    assert resumed.csv_text == full.csv_text
    assert (tmp_path / "cut" / "results.csv").read_bytes() == (tmp_path / "full" / "results.csv").read_bytes()


def test_resume_mismatch(baseline, tmp_path):
    sc = ScenarioConfig(iters=2, methods=("twfe",))
    run_grid(RunManifest(scenarios=(sc,), out_dir=str(tmp_path)), baseline=baseline)
    with pytest.raises(ResumeMismatch):
        run_grid(RunManifest(scenarios=(sc,), master_seed=1, out_dir=str(tmp_path)), resume=True, baseline=baseline)
    with pytest.raises(ResumeMismatch):
        run_grid(RunManifest(scenarios=(sc.with_(iters=3),), out_dir=str(tmp_path)), resume=True,
                 baseline=baseline)


def test_failure_budget_on_defaults(baseline):
    sc = ScenarioConfig(form="nonlinear", confounder_mode="trend", magnitude="large", iters=20)
    rows = run_scenario(sc, baseline)
    assert sum(r.n_failed for r in rows) / sum(r.n_iters + r.n_failed for r in rows) < 0.02
