"""Baseline (untreated) outcome panels: loading real data or synthesizing one.

The synthetic generator works on the log scale::

    log R_it = log(level_start) + national_trend * t + u_i + s_i * (t - tbar)
               + c_i * q(t) + coupling * sum_{s<t} (U_is - mean_j U_js)
               + d_it + e_it

with unit intercepts ``u_i``, unit slopes ``s_i``, optional unit curvature
``c_i`` on a centred quadratic ``q(t)``, an AR(1) deviation ``d_it``, white
noise ``e_it`` and unemployment ``U_it`` that follows a national cycle plus
persistent unit offsets. Units with above-average unemployment drift upward
faster, which gives the panel a time-varying unemployment/outcome
association.

The expected rate ``R_it`` is then observed with Poisson sampling noise on
the death count implied by the unit's population (``count_noise`` scales it
between none and full), mimicking the small-count jitter of state rates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .defaults import BASELINE_DEFAULTS
from .errors import InvalidParams
from .panel import PanelDataset, read_panel_csv


@dataclass(frozen=True)
class BaselineGenParams:
    n_units: int = BASELINE_DEFAULTS["n_units"]
    first_year: int = BASELINE_DEFAULTS["first_year"]
    last_year: int = BASELINE_DEFAULTS["last_year"]
    level_start: float = BASELINE_DEFAULTS["level_start"]
    national_trend: float = BASELINE_DEFAULTS["national_trend"]
    ar_coefficient: float = BASELINE_DEFAULTS["ar_coefficient"]
    noise_sd: float = BASELINE_DEFAULTS["noise_sd"]
    unit_heterogeneity_sd: float = BASELINE_DEFAULTS["unit_heterogeneity_sd"]
    unit_trend_sd: float = BASELINE_DEFAULTS["unit_trend_sd"]
    unit_curvature_sd: float = BASELINE_DEFAULTS["unit_curvature_sd"]
    white_noise_sd: float = BASELINE_DEFAULTS["white_noise_sd"]
    count_noise: float = BASELINE_DEFAULTS["count_noise"]
    unemployment_mean: float = BASELINE_DEFAULTS["unemployment_mean"]
    unemployment_cycle_amplitude: float = BASELINE_DEFAULTS["unemployment_cycle_amplitude"]
    unemployment_cycle_period: float = BASELINE_DEFAULTS["unemployment_cycle_period"]
    unemployment_cycle_peak: float = BASELINE_DEFAULTS["unemployment_cycle_peak"]
    unemployment_unit_sd: float = BASELINE_DEFAULTS["unemployment_unit_sd"]
    unemployment_noise_sd: float = BASELINE_DEFAULTS["unemployment_noise_sd"]
    unemployment_ar: float = BASELINE_DEFAULTS["unemployment_ar"]
    unem_outcome_coupling: float = BASELINE_DEFAULTS["unem_outcome_coupling"]
    population_min: float = BASELINE_DEFAULTS["population_min"]
    population_max: float = BASELINE_DEFAULTS["population_max"]

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineGenParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParams(f"unknown baseline parameters: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.n_units < 2:
            raise InvalidParams("n_units must be >= 2")
        if self.last_year < self.first_year:
            raise InvalidParams("last_year before first_year")
        if self.level_start <= 0:
            raise InvalidParams("level_start must be positive")
        for name in ("noise_sd", "unit_heterogeneity_sd", "unit_trend_sd", "unit_curvature_sd",
                     "white_noise_sd", "unemployment_unit_sd", "unemployment_noise_sd",
                     "unemployment_cycle_amplitude"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        for name in ("ar_coefficient", "unemployment_ar"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise InvalidParams(f"{name} must lie in [0, 1)")
        if not 0 <= self.count_noise <= 1:
            raise InvalidParams("count_noise must lie in [0, 1]")
        if self.unemployment_cycle_period <= 0:
            raise InvalidParams("unemployment_cycle_period must be positive")
        if not 0 < self.population_min <= self.population_max:
            raise InvalidParams("need 0 < population_min <= population_max")


def load_baseline(path: str | Path) -> PanelDataset:
    return read_panel_csv(path)


def _ar1(rng: np.random.Generator, n: int, t: int, rho: float, sd: float) -> np.ndarray:
    """Stationary AR(1) paths with innovation SD ``sd``."""
    eps = rng.standard_normal((n, t)) * sd
    out = np.empty((n, t))
    out[:, 0] = eps[:, 0] / np.sqrt(1.0 - rho * rho)
    for j in range(1, t):
        out[:, j] = rho * out[:, j - 1] + eps[:, j]
    return out


def generate_with_diagnostics(params: BaselineGenParams, seed: int) -> tuple[PanelDataset, dict]:
    params.validate()
    rng = np.random.default_rng(seed)
    n = params.n_units
    years = np.arange(params.first_year, params.last_year + 1)
    t = len(years)
    tt = np.arange(t, dtype=float)

    # draw order is part of the determinism contract
    intercept = rng.standard_normal(n) * params.unit_heterogeneity_sd
    slope = rng.standard_normal(n) * params.unit_trend_sd
    curvature = rng.standard_normal(n) * params.unit_curvature_sd
    deviation = _ar1(rng, n, t, params.ar_coefficient, params.noise_sd)
    white = rng.standard_normal((n, t)) * params.white_noise_sd
    unem_offset = rng.standard_normal(n) * params.unemployment_unit_sd
    unem_noise = _ar1(rng, n, t, params.unemployment_ar, params.unemployment_noise_sd)
    log_pop = rng.uniform(np.log(params.population_min), np.log(params.population_max), n)

    cycle = params.unemployment_cycle_amplitude * np.cos(
        2 * np.pi * (years - params.unemployment_cycle_peak) / params.unemployment_cycle_period
    )
    unem = params.unemployment_mean + cycle[None, :] + unem_offset[:, None] + unem_noise
    n_unem_truncated = int(np.sum(unem < 0))
    unem = np.maximum(unem, 0.0)

    unem_dev = unem - unem.mean(axis=0, keepdims=True)
    drift = np.zeros((n, t))
    drift[:, 1:] = np.cumsum(unem_dev[:, :-1], axis=1) * params.unem_outcome_coupling

    centred = tt - tt.mean()
    quad = centred ** 2 / centred.var() - 1.0 if t > 1 else np.zeros(t)
    log_dev = (params.national_trend * tt[None, :] + intercept[:, None]
               + slope[:, None] * centred[None, :] + curvature[:, None] * quad[None, :]
               + drift + deviation + white)
    outcome = params.level_start * np.exp(log_dev)
    pop = np.exp(log_pop)
    if params.count_noise > 0:
        # separate stream so the sampling layer leaves the draws above untouched
        count_rng = np.random.default_rng(seed + 1)
        scale = pop[:, None] / 1e5
        observed = count_rng.poisson(outcome * scale) / scale
        outcome = outcome + params.count_noise * (observed - outcome)
    n_truncated = int(np.sum(outcome < 0))
    outcome = np.maximum(outcome, 0.0)

    population = np.rint(pop).astype(np.int64)
    population = np.repeat(population[:, None], t, axis=1)
    width = max(2, len(str(n)))
    units = tuple(f"S{i + 1:0{width}d}" for i in range(n))
    panel = PanelDataset(units, tuple(int(y) for y in years), outcome, unem, population)
    return panel, {"n_truncated": n_truncated, "n_unemployment_truncated": n_unem_truncated}


def generate_synthetic_baseline(params: BaselineGenParams | None = None, seed: int = 0) -> PanelDataset:
    """Synthesize a balanced baseline panel; a pure function of ``(params, seed)``."""
    return generate_with_diagnostics(params or BaselineGenParams(), seed)[0]


def lag1_autocorrelation(series: np.ndarray) -> np.ndarray:
    """Sample lag-1 autocorrelation of each row (row mean removed)."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean(axis=1, keepdims=True)
    num = np.sum(x[:, 1:] * x[:, :-1], axis=1)
    den = np.sum(x * x, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den
