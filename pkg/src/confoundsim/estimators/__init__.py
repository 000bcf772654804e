"""Policy-effect estimators.

Every estimator takes ``(units, years)`` outcome and exposure grids plus
optional covariates and returns an :class:`EstimateRecord`.
"""

from __future__ import annotations

from ..panel import SimulatedPanel
from .ar import estimate_ar
from .ascm import estimate_ascm
from .csa import estimate_csa, group_time_atts
from .records import EstimateRecord, GroupTimeATT
from .twfe import estimate_twfe

ESTIMATORS = {
    "twfe": estimate_twfe,
    "ar": estimate_ar,
    "ascm": estimate_ascm,
    "csa": estimate_csa,
}


def estimate(method: str, sim: SimulatedPanel, **options) -> EstimateRecord:
    """Run one estimator on a simulated panel with its default configuration.

    TWFE is weighted by population; the other methods are unweighted.
    """
    if method not in ESTIMATORS:
        raise ValueError(f"unknown method {method!r}")
    if method == "twfe":
        return estimate_twfe(sim.outcome_sim, sim.exposure, sim.covariates,
                             weights=sim.population, **options)
    return ESTIMATORS[method](sim.outcome_sim, sim.exposure, sim.covariates, **options)


__all__ = [
    "ESTIMATORS",
    "EstimateRecord",
    "GroupTimeATT",
    "estimate",
    "estimate_ar",
    "estimate_ascm",
    "estimate_csa",
    "estimate_twfe",
    "group_time_atts",
]
