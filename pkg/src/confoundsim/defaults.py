"""Shipped constants: coefficient sets, seeds, effect sizes, generator defaults.

The coefficient sets below are the published confounding coefficients. The
synthetic-baseline defaults are NOT published values; they were tuned so the
shipped coefficient sets yield roughly the intended number of enacting units
and confounding strengths on the synthetic panel.
"""

from __future__ import annotations

NULL_EFFECT = 0.0
NONNULL_EFFECT = -0.92

MASTER_SEED = 894539
DISPATCH_SEED = 9782

DEFAULT_ITERS = 200
FULL_ITERS = 5000

FIRST_YEAR = 1999
LAST_YEAR = 2016

METHODS = ("twfe", "ar", "ascm", "csa")
FORMS = ("linear", "nonlinear")
MODES = ("level", "trend")
MAGNITUDES = ("none", "small", "medium", "large")
EFFECTS = ("null", "nonnull")

SMD_TARGETS = {"small": 0.15, "medium": 0.30, "large": 0.45}

_Z = dict(b3=0.0, b4=0.0, b5=0.0, a3=0.0, a4=0.0, a5=0.0)

# form -> confounder mode -> magnitude -> coefficients
COEFFICIENTS: dict[str, dict[str, dict[str, dict[str, float]]]] = {
    "linear": {
        "level": {
            "small": dict(b0=-3.9, b1=0.06, b2=0.06, a1=0.2, a2=0.05, **_Z),
            "medium": dict(b0=-4.3, b1=0.11, b2=0.07, a1=0.2, a2=0.05, **_Z),
            "large": dict(b0=-4.7, b1=0.16, b2=0.1, a1=0.2, a2=0.05, **_Z),
            "none": dict(b0=-4.8, b1=0.0, b2=0.0, a1=0.0, a2=0.0, **_Z),
        },
        "trend": {
            "small": dict(b0=-3.7, b1=0.15, b2=0.05, a1=0.5, a2=0.11, **_Z),
            "medium": dict(b0=-4.5, b1=0.26, b2=0.16, a1=0.5, a2=0.11, **_Z),
            "large": dict(b0=-5.1, b1=0.37, b2=0.22, a1=0.5, a2=0.11, **_Z),
            "none": dict(b0=-5.0, b1=0.0, b2=0.0, a1=0.0, a2=0.0, **_Z),
        },
    },
    "nonlinear": {
        "level": {
            "small": dict(b0=-3.8, b1=0.05, b2=0.05, b3=0.0003, b4=0.0003, b5=0.000003,
                          a1=0.01, a2=0.01, a3=0.01, a4=0.01, a5=0.001),
            "medium": dict(b0=-4.0, b1=0.05, b2=0.05, b3=0.003, b4=0.003, b5=0.00003,
                           a1=0.01, a2=0.01, a3=0.01, a4=0.01, a5=0.001),
            "large": dict(b0=-4.2, b1=0.05, b2=0.05, b3=0.0055, b4=0.0055, b5=0.000055,
                          a1=0.01, a2=0.01, a3=0.01, a4=0.01, a5=0.001),
        },
        "trend": {
            "small": dict(b0=-3.6, b1=0.05, b2=0.001, b3=0.005, b4=0.008, b5=0.005,
                          a1=0.1, a2=0.05, a3=0.1, a4=0.01, a5=0.01),
            "medium": dict(b0=-4.4, b1=0.05, b2=0.02, b3=0.018, b4=0.015, b5=0.015,
                           a1=0.1, a2=0.05, a3=0.1, a4=0.01, a5=0.01),
            "large": dict(b0=-5.1, b1=0.05, b2=0.03, b3=0.025, b4=0.025, b5=0.025,
                          a1=0.1, a2=0.05, a3=0.1, a4=0.01, a5=0.01),
        },
    },
}

# Synthetic baseline generator defaults (tuned, see module docstring).
BASELINE_DEFAULTS = dict(
    n_units=49,
    first_year=FIRST_YEAR,
    last_year=LAST_YEAR,
    level_start=5.0978,
    national_trend=0.003,
    ar_coefficient=0.3,
    noise_sd=0.1492,
    unit_heterogeneity_sd=0.2629,
    unit_trend_sd=0.004,
    unit_curvature_sd=0.0,
    white_noise_sd=0.2089,
    count_noise=1.0,
    unemployment_mean=6.0,
    unemployment_cycle_amplitude=2.0,
    unemployment_cycle_period=18.0,
    unemployment_cycle_peak=2010.0,
    unemployment_unit_sd=2.0,
    unemployment_noise_sd=0.4,
    unemployment_ar=0.6,
    unem_outcome_coupling=0.005,
    population_min=5.0e5,
    population_max=4.0e7,
)
BASELINE_SEED = 20230101
