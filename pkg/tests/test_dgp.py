import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from confoundsim.baseline import generate_synthetic_baseline
from confoundsim.defaults import BASELINE_SEED
from confoundsim.dgp import (
    CoefficientSet,
    ScenarioConfig,
    augment_outcomes,
    compute_confounder,
    default_coefficients,
    enactment_probability,
    measure_confounding_smd,
    simulate,
    simulate_adoption,
    standardized_mean_difference,
    untreated_path,
)
from confoundsim.errors import DegenerateGroups, InconsistentScenario, InsufficientLags
from confoundsim.panel import Enactment, PanelDataset, TreatmentSchedule

from conftest import make_panel


def constant_panel(n=3, t=8, level=10.0, unem=5.0):
    return PanelDataset(tuple(f"u{i}" for i in range(n)), tuple(range(2000, 2000 + t)),
                        np.full((n, t), level), np.full((n, t), unem), np.full((n, t), 1000))


def test_confounder_formulas():
    assert compute_confounder([5, 5, 5, 9], "level", 3) == 5.0
    assert compute_confounder([5, 5, 5], "trend", 3) == 0.0
    assert compute_confounder([2.0, 4.0, 6.0], "level", 3) == 4.0
    assert compute_confounder([2.0, 4.0, 6.0], "trend", 3) == -4.0
    with pytest.raises(InsufficientLags):
        compute_confounder([1.0, 2.0], "level", 2)


def test_enactment_probability_values():
    none = CoefficientSet(b0=-4.8)
    getcontext().prec = 30
    exact = 1 / (1 + Decimal(4.8).exp())
    assert enactment_probability(0.0, 0.0, none) == pytest.approx(float(exact), rel=1e-12)
    assert round(enactment_probability(0.0, 0.0, none), 5) == 0.00816
    assert enactment_probability(1.0, 2.0, CoefficientSet()) == 0.5
    small = default_coefficients("linear", "level", "small")
    assert enactment_probability(10.0, 5.0, small) == pytest.approx(1 / (1 + math.exp(3.0)), abs=1e-12)


def test_never_enact_sentinel():
    b = make_panel(5, 10)
    sc = ScenarioConfig(coefficients=CoefficientSet(b0=-math.inf))
    sched = simulate_adoption(b, sc, np.random.default_rng(0))
    assert sched.n_treated == 0


def test_forced_enactment():
    b = constant_panel(n=1)
    sc = ScenarioConfig(coefficients=CoefficientSet(b0=math.inf))
    sched = simulate_adoption(b, sc, np.random.default_rng(0))
    e = sched.enactments[0]
    assert e.year == 2003 and 1 <= e.month <= 12


def test_identity_generation():
    b = make_panel(4, 9, seed=2)
    sc = ScenarioConfig(coefficients=CoefficientSet(b0=-2.0))
    sim = simulate(b, sc, np.random.default_rng(3))
    assert np.array_equal(sim.outcome_sim, b.outcome)


def test_pure_shift():
    b = make_panel(3, 8, seed=4)
    sc = ScenarioConfig(effect="nonnull", coefficients=CoefficientSet(b0=-2.0))
    sched = TreatmentSchedule(b.units, (Enactment(2004, 1), None, None))
    sim = augment_outcomes(b, sched, sc)
    expect = b.outcome.copy()
    expect[0, 4:] -= 0.92
    np.testing.assert_allclose(sim.outcome_sim, expect, atol=1e-12)
    assert sim.truth == -0.92


def test_steady_state_fixed_point():
    b = constant_panel(t=40)
    sc = ScenarioConfig(coefficients=CoefficientSet(b0=-5.0, a1=0.2, a2=0.05))
    ystar, _ = untreated_path(b, sc)
    assert ystar[0, -1] == pytest.approx(12.8125, abs=1e-9)


def test_untreated_recursion_by_hand():
    b = make_panel(2, 7, seed=5)
    co = CoefficientSet(b0=-3.0, a1=0.3, a2=0.1, a3=0.01, a4=0.02, a5=0.005)
    sc = ScenarioConfig(form="nonlinear", confounder_mode="trend", coefficients=co)
    ystar, conf = untreated_path(b, sc)
    y0, x = b.outcome, b.unemployment
    for i in range(2):
        for t in range(3, 7):
            c = ystar[i, t - 3] - ystar[i, t - 1]
            assert conf[i, t] == pytest.approx(c)
            extra = 0.3 * c + 0.1 * x[i, t] + 0.01 * c * c + 0.02 * x[i, t] ** 2 + 0.005 * c * x[i, t]
            assert ystar[i, t] == pytest.approx(y0[i, t] + extra)


def test_regeneration_is_deterministic():
    b = make_panel(6, 10, seed=1)
    sc = ScenarioConfig(magnitude="large", effect="nonnull")
    s1 = simulate(b, sc, np.random.default_rng(9))
    s2 = simulate(b, sc, np.random.default_rng(9))
    assert np.array_equal(s1.outcome_sim, s2.outcome_sim)
    again = augment_outcomes(b, s1.schedule, sc)
    assert np.array_equal(again.outcome_sim, s1.outcome_sim)


def test_smd_examples():
    assert standardized_mean_difference([1, 2, 3], [1, 2, 3]) == 0.0
    a = np.array([12.0] * 4)
    c = np.array([10.0] * 4)
    # inject spread so the pooled SD is 4 while the means stay at 12 and 10
    a2 = a + np.array([4, -4, 4, -4]) * math.sqrt(3) / 2
    c2 = c + np.array([4, -4, 4, -4]) * math.sqrt(3) / 2
    assert standardized_mean_difference(a2, c2) == pytest.approx(0.5)
    with pytest.raises(DegenerateGroups):
        standardized_mean_difference([], [1.0, 2.0])
    with pytest.raises(DegenerateGroups):
        standardized_mean_difference([1.0, 1.0], [1.0, 1.0])


def test_smd_needs_both_groups():
    b = make_panel(4, 8)
    sc = ScenarioConfig(coefficients=CoefficientSet(b0=-math.inf))
    sim = simulate(b, sc, np.random.default_rng(0))
    with pytest.raises(DegenerateGroups):
        measure_confounding_smd(sim)


def test_scenario_validation():
    with pytest.raises(InconsistentScenario):
        ScenarioConfig(form="cubic")
    with pytest.raises(InconsistentScenario):
        ScenarioConfig(effect="null", alpha=-0.92)
    with pytest.raises(InconsistentScenario):
        ScenarioConfig(form="linear", coefficients=CoefficientSet(b3=0.1))
    with pytest.raises(InconsistentScenario):
        ScenarioConfig(methods=("ols",))
    sc = ScenarioConfig(form="nonlinear", magnitude="none")
    assert sc.coefficients == default_coefficients("linear", "level", "none")
    assert sc.scenario_id == "nonlinear-level-none-null"


def test_enacting_count_band():
    b = generate_synthetic_baseline(seed=BASELINE_SEED)
    sc = ScenarioConfig(magnitude="medium")
    path = untreated_path(b, sc)
    rng = np.random.default_rng(2024)
    counts = np.array([simulate_adoption(b, sc, rng, _path=path).n_treated for _ in range(5000)])
    assert 15 <= counts.mean() <= 29
    assert counts.min() >= 5 and counts.max() <= 40


def test_policy_term_only_touches_exposed_cells():
    b = make_panel(8, 10, seed=6)
    co = CoefficientSet(b0=-1.5, b1=0.05, a1=0.2, a2=0.05)
    null = simulate(b, ScenarioConfig(coefficients=co), np.random.default_rng(4))
    eff = simulate(b, ScenarioConfig(effect="nonnull", coefficients=co), np.random.default_rng(4))
    assert null.schedule == eff.schedule
    never = eff.exposure.max(axis=1) == 0
    assert np.array_equal(null.outcome_sim[never], eff.outcome_sim[never])
    np.testing.assert_allclose(eff.outcome_sim - null.outcome_sim, -0.92 * eff.exposure, atol=1e-12)
