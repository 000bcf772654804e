import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confoundsim.baseline import generate_synthetic_baseline
from confoundsim.defaults import BASELINE_SEED, FORMS, MAGNITUDES, METHODS, MODES
from confoundsim.dgp import ScenarioConfig
from confoundsim.errors import TooFewIterations
from confoundsim.estimators import EstimateRecord
from confoundsim.harness import run_scenario
from confoundsim.metrics import (
    CSV_COLUMNS,
    MetricsRow,
    emit_tables,
    read_results_csv,
    results_csv,
    summarize,
)


def rec(a, se=0.5, method="twfe"):
    return EstimateRecord(method, a, se)


def test_perfect_estimates():
    row = summarize([rec(0.3, 0.1)] * 4, [(0.3, 1.5)] * 4)
    assert (row.std_bias, row.mc_variance, row.rmse, row.coverage) == (0, 0, 0, 1)


def test_hand_arithmetic():
    row = summarize([rec(1.0), rec(-1.0)], [(0.0, 2.0), (0.0, 2.0)])
    assert row.std_bias == 0.5
    assert row.mc_variance == 1.0
    assert row.rmse == 1.0
    assert row.std_mean_bias == 0.0
    assert row.model_based_variance == 0.25


def test_failures_counted_and_excluded():
    row = summarize([rec(1.0), None, rec(3.0)], [(0.0, 1.0)] * 3, n_failed=2)
    assert row.n_iters == 2 and row.n_failed == 3
    assert row.std_bias == 2.0
    with pytest.raises(TooFewIterations):
        summarize([None, rec(1.0)], [(0.0, 1.0)] * 2)


def test_missing_se_left_out_of_coverage():
    row = summarize([rec(0.1, math.nan), rec(0.1, 1.0)], [(0.0, 1.0)] * 2)
    assert row.coverage == 1.0
    assert row.n_se_missing == 1
    assert row.model_based_variance == 1.0


estimates = st.lists(st.tuples(st.floats(-5, 5), st.floats(0.01, 3), st.floats(0.5, 4)), min_size=2, max_size=40)


@settings(max_examples=80, deadline=None)
@given(estimates, st.randoms(use_true_random=False))
def test_permutation_invariance(items, rnd):
    recs = [rec(a, se) for a, se, _ in items]
    truths = [(0.0, sd) for _, _, sd in items]
    order = list(range(len(items)))
    rnd.shuffle(order)
    r1 = summarize(recs, truths)
    r2 = summarize([recs[i] for i in order], [truths[i] for i in order])
    for name, v in r1.to_dict().items():
        w = getattr(r2, name)
        if isinstance(v, float):
            assert w == pytest.approx(v, rel=1e-12, abs=1e-12)
        else:
            assert w == v


@settings(max_examples=80, deadline=None)
@given(estimates)
def test_bias_variance_and_se_doubling(items):
    recs = [rec(a, se) for a, se, _ in items]
    truths = [(0.1, sd) for _, _, sd in items]
    row = summarize(recs, truths)
    assert row.rmse >= math.sqrt(row.mc_variance) - 1e-12
    wide = summarize([rec(r.alpha_hat, 2 * r.model_se) for r in recs], truths)
    assert math.sqrt(wide.model_based_variance) == pytest.approx(2 * math.sqrt(row.model_based_variance), rel=1e-14)
    assert wide.coverage >= row.coverage


def row(method="twfe", mode="level", form="linear", mag="small", effect="null", v=0.1):
    sc = ScenarioConfig(form=form, confounder_mode=mode, magnitude=mag, effect=effect)
    return summarize([rec(v, method=method), rec(-v, method=method)], [(sc.alpha, 1.0)] * 2, scenario=sc)


def test_csv_single_row():
    text = results_csv([row()])
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0].split(",")[: len(CSV_COLUMNS)] == list(CSV_COLUMNS)
    assert lines[1].startswith("twfe,levels,linear,small,")


def test_csv_orders_magnitudes():
    text = results_csv([row(mag="large"), row(mag="small"), row(mag="medium")])
    assert [l.split(",")[3] for l in text.splitlines()[1:]] == ["small", "medium", "large"]


def test_full_grid_table(tmp_path):
    rows = [row(m, mode, form, mag, eff) for m in METHODS for mode in MODES for form in FORMS
            for mag in MAGNITUDES[1:] for eff in ("null", "nonnull")]
    csv_text, json_text = emit_tables(rows[::-1], tmp_path)
    assert len(csv_text.splitlines()) == 97
    back = read_results_csv(tmp_path / "results.csv")
    assert len(back) == 96
    assert results_csv(back) == csv_text
    for r in back:
        assert isinstance(r, MetricsRow) and r.method in METHODS
        assert r.n_iters == 2
        assert 0.0 <= r.coverage <= 1.0


@pytest.mark.slow
def test_reference_band_ar_levels_linear_small():
    baseline = generate_synthetic_baseline(seed=BASELINE_SEED)
    sc = ScenarioConfig(magnitude="small", methods=("ar",), iters=500)
    (r,) = run_scenario(sc, baseline)
    assert -0.03 <= r.std_mean_bias <= 0.05
    assert 0.85 <= r.coverage <= 0.97
