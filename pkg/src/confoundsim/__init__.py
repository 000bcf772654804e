"""Simulation engine comparing policy-effect estimators under confounding.

Typical use::

    from confoundsim import ScenarioConfig, generate_synthetic_baseline, run_scenario

    base = generate_synthetic_baseline()
    rows = run_scenario(ScenarioConfig("linear", "level", "small", iters=50), base)
"""

__version__ = "0.1.0"

from .baseline import BaselineGenParams, generate_synthetic_baseline, load_baseline
from .dgp import CoefficientSet, ScenarioConfig, augment_outcomes, simulate, simulate_adoption
from .estimators import estimate, estimate_ar, estimate_ascm, estimate_csa, estimate_twfe
from .harness import RunManifest, run_grid, run_scenario
from .metrics import MetricsRow, emit_tables, summarize
from .panel import PanelDataset, SimulatedPanel, TreatmentSchedule

__all__ = [
    "BaselineGenParams",
    "CoefficientSet",
    "MetricsRow",
    "PanelDataset",
    "RunManifest",
    "ScenarioConfig",
    "SimulatedPanel",
    "TreatmentSchedule",
    "augment_outcomes",
    "emit_tables",
    "estimate",
    "estimate_ar",
    "estimate_ascm",
    "estimate_csa",
    "estimate_twfe",
    "generate_synthetic_baseline",
    "load_baseline",
    "run_grid",
    "run_scenario",
    "simulate",
    "simulate_adoption",
    "summarize",
]
