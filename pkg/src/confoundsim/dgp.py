"""Confounded, staggered-adoption data generation on top of a baseline panel.

For each year ``t`` after three lag-seeding years the generator

1. computes the confounder ``C_it`` from the previously generated outcomes,
2. lets every not-yet-treated unit enact with probability
   ``logistic(b0 + b1 C + b2 X [+ b3 C^2 + b4 X^2 + b5 C X])``,
3. generates ``Y*_it = Y0_it + a1 C + a2 X [+ a3 C^2 + a4 X^2 + a5 C X] + alpha A_it``.

``C`` is computed from the untreated branch of ``Y*`` so the policy term
never feeds back into later confounding, which keeps the true effect equal
to ``alpha`` in every treated cell.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np
from scipy.special import expit

from .defaults import (
    COEFFICIENTS,
    DEFAULT_ITERS,
    EFFECTS,
    FORMS,
    MAGNITUDES,
    MASTER_SEED,
    METHODS,
    MODES,
    NONNULL_EFFECT,
    NULL_EFFECT,
)
from .errors import DegenerateGroups, InconsistentScenario, InsufficientLags
from .panel import Enactment, PanelDataset, SimulatedPanel, TreatmentSchedule, exposure_matrix

N_LAGS = 3
_NONLINEAR_TERMS = ("b3", "b4", "b5", "a3", "a4", "a5")


@dataclass(frozen=True)
class CoefficientSet:
    b0: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0
    b4: float = 0.0
    b5: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientSet":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InconsistentScenario(f"unknown coefficients {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def is_linear(self) -> bool:
        return all(getattr(self, k) == 0 for k in _NONLINEAR_TERMS)


def default_coefficients(form: str, mode: str, magnitude: str) -> CoefficientSet:
    """Shipped coefficient set for a grid cell.

    No "none" set exists for the nonlinear form; the linear "none" set of the
    same confounder mode is used instead.
    """
    if form not in FORMS or mode not in MODES or magnitude not in MAGNITUDES:
        raise InconsistentScenario(f"no coefficient set for {form}/{mode}/{magnitude}")
    table = COEFFICIENTS[form][mode]
    if magnitude not in table:
        table = COEFFICIENTS["linear"][mode]
    return CoefficientSet.from_dict(table[magnitude])


@dataclass(frozen=True)
class ScenarioConfig:
    form: str = "linear"
    confounder_mode: str = "level"
    magnitude: str = "none"
    effect: str = "null"
    coefficients: Optional[CoefficientSet] = None
    alpha: Optional[float] = None
    iters: int = DEFAULT_ITERS
    master_seed: int = MASTER_SEED
    methods: tuple[str, ...] = METHODS

    def __post_init__(self):
        if self.form not in FORMS:
            raise InconsistentScenario(f"form must be one of {FORMS}, got {self.form!r}")
        if self.confounder_mode not in MODES:
            raise InconsistentScenario(f"confounder_mode must be one of {MODES}, got {self.confounder_mode!r}")
        if self.magnitude not in MAGNITUDES:
            raise InconsistentScenario(f"magnitude must be one of {MAGNITUDES}, got {self.magnitude!r}")
        if self.effect not in EFFECTS:
            raise InconsistentScenario(f"effect must be one of {EFFECTS}, got {self.effect!r}")
        if self.coefficients is None:
            object.__setattr__(self, "coefficients",
                               default_coefficients(self.form, self.confounder_mode, self.magnitude))
        expected_alpha = NULL_EFFECT if self.effect == "null" else NONNULL_EFFECT
        if self.alpha is None:
            object.__setattr__(self, "alpha", expected_alpha)
        if (float(self.alpha) == 0.0) != (self.effect == "null"):
            raise InconsistentScenario(f"alpha={self.alpha} inconsistent with effect={self.effect!r}")
        if self.form == "linear" and not self.coefficients.is_linear:
            raise InconsistentScenario("linear scenarios must have zero nonlinear coefficients")
        methods = tuple(self.methods)
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise InconsistentScenario(f"methods must be a non-empty subset of {METHODS}, got {methods}")
        object.__setattr__(self, "methods", methods)
        if int(self.iters) < 1:
            raise InconsistentScenario("iters must be >= 1")

    @property
    def scenario_id(self) -> str:
        return f"{self.form}-{self.confounder_mode}-{self.magnitude}-{self.effect}"

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    def fingerprint(self) -> str:
        """Hash of everything that determines the scenario's estimates."""
        d = self.to_dict()
        d.pop("methods")
        d.pop("iters")
        payload = repr(sorted((k, repr(v)) for k, v in d.items())).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


# -- generation primitives ------------------------------------------------------

def compute_confounder(series, mode: str, t: int):
    """Confounder from the three values preceding index ``t``.

    ``series`` may be one unit's outcome path or a ``(units, years)`` array.
    Level mode is the three-year moving average; trend mode is
    ``Y[t-3] - Y[t-1]``.
    """
    s = np.asarray(series, dtype=float)
    if t < N_LAGS or t > s.shape[-1]:
        raise InsufficientLags(f"need {N_LAGS} lags before index {t}")
    lags = s[..., t - N_LAGS:t]
    if mode == "level":
        out = (lags[..., 0] + lags[..., 1] + lags[..., 2]) / 3.0
    elif mode == "trend":
        out = lags[..., 0] - lags[..., 2]
    else:
        raise ValueError(f"unknown confounder mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


def linear_predictor(c, x, coeffs: CoefficientSet, form: str):
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    eta = coeffs.b0 + coeffs.b1 * c + coeffs.b2 * x
    if form == "nonlinear":
        eta = eta + coeffs.b3 * c * c + coeffs.b4 * x * x + coeffs.b5 * c * x
    return eta


def enactment_probability(c, x, coeffs: CoefficientSet, form: str = "linear"):
    p = expit(linear_predictor(c, x, coeffs, form))
    return float(p) if np.ndim(p) == 0 else p


def confounding_terms(c, x, coeffs: CoefficientSet, form: str):
    out = coeffs.a1 * c + coeffs.a2 * x
    if form == "nonlinear":
        out = out + coeffs.a3 * c * c + coeffs.a4 * x * x + coeffs.a5 * c * x
    return out


def seed_confounder(y0, mode: str):
    """Confounder for the lag-seeding years, built from the baseline seed block.

    Level mode uses the mean of the first three baseline values, trend mode
    ``Y0[0] - Y0[2]``. It keeps the confounding terms present from the first
    panel year, so the seed years do not sit on a different level from the
    rest of the panel.
    """
    return compute_confounder(np.asarray(y0, dtype=float), mode, N_LAGS)


def untreated_path(baseline: PanelDataset, scenario: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """No-policy branch of ``Y*`` and the confounder grid.

    From the fourth year on, ``C`` comes from the three preceding ``Y*``
    values. In the three seed years ``C`` is :func:`seed_confounder` of the
    baseline; no enactment is possible there.
    """
    y0 = baseline.outcome
    x = baseline.unemployment
    n, t = y0.shape
    if t <= N_LAGS:
        raise InsufficientLags(f"panel needs more than {N_LAGS} years, has {t}")
    coeffs = scenario.coefficients
    ystar = np.empty((n, t))
    conf = np.empty((n, t))
    c0 = seed_confounder(y0, scenario.confounder_mode)
    for j in range(N_LAGS):
        conf[:, j] = c0
        ystar[:, j] = y0[:, j] + confounding_terms(c0, x[:, j], coeffs, scenario.form)
    for j in range(N_LAGS, t):
        c = compute_confounder(ystar, scenario.confounder_mode, j)
        conf[:, j] = c
        ystar[:, j] = y0[:, j] + confounding_terms(c, x[:, j], coeffs, scenario.form)
    return ystar, conf


def simulate_adoption(baseline: PanelDataset, scenario: ScenarioConfig, rng: np.random.Generator,
                      _path: tuple[np.ndarray, np.ndarray] | None = None) -> TreatmentSchedule:
    """Draw an absorbing enactment schedule.

    Enactment is possible from the fourth panel year on. Uniform draws are
    taken for every (unit, year) regardless of status so the stream layout
    does not depend on earlier outcomes; months are drawn afterwards for the
    enacting units in unit order.
    """
    _, conf = _path if _path is not None else untreated_path(baseline, scenario)
    x = baseline.unemployment
    n, t = x.shape
    u = rng.random((n, t))
    enact_col = np.full(n, -1)
    for j in range(N_LAGS, t):
        p = enactment_probability(conf[:, j], x[:, j], scenario.coefficients, scenario.form)
        newly = (enact_col < 0) & (u[:, j] < p)
        enact_col[newly] = j
    treated = np.flatnonzero(enact_col >= 0)
    months = rng.integers(1, 13, size=treated.size)
    slots: list[Optional[Enactment]] = [None] * n
    for i, m in zip(treated, months):
        slots[i] = Enactment(baseline.years[enact_col[i]], int(m))
    return TreatmentSchedule(baseline.units, tuple(slots))


def augment_outcomes(baseline: PanelDataset, schedule: TreatmentSchedule, scenario: ScenarioConfig,
                     _path: tuple[np.ndarray, np.ndarray] | None = None) -> SimulatedPanel:
    ystar, conf = _path if _path is not None else untreated_path(baseline, scenario)
    a = exposure_matrix(schedule, baseline)
    alpha = float(scenario.alpha)
    outcome = ystar + alpha * a if alpha != 0.0 else ystar.copy()
    return SimulatedPanel(baseline, schedule, conf, ystar, outcome, alpha, a)


def simulate(baseline: PanelDataset, scenario: ScenarioConfig, rng: np.random.Generator) -> SimulatedPanel:
    """Adoption draw plus outcome generation, computing the path once."""
    path = untreated_path(baseline, scenario)
    schedule = simulate_adoption(baseline, scenario, rng, _path=path)
    return augment_outcomes(baseline, schedule, scenario, _path=path)


# -- confounding diagnostics ---------------------------------------------------

def standardized_mean_difference(active, comparison) -> float:
    a = np.asarray(active, dtype=float).ravel()
    b = np.asarray(comparison, dtype=float).ravel()
    if a.size < 1 or b.size < 1 or a.size + b.size < 3:
        raise DegenerateGroups("both groups need cells and at least 3 cells in total")
    va = a.var(ddof=1) if a.size > 1 else 0.0
    vb = b.var(ddof=1) if b.size > 1 else 0.0
    pooled = math.sqrt(((a.size - 1) * va + (b.size - 1) * vb) / (a.size + b.size - 2))
    if pooled == 0.0:
        raise DegenerateGroups("pooled SD is zero")
    return float((a.mean() - b.mean()) / pooled)


def measure_confounding_smd(sim: SimulatedPanel) -> float:
    """SMD of active-policy cells against never-treated plus pre-enactment cells."""
    active = sim.exposure > 0
    if not active.any() or active.all():
        raise DegenerateGroups("need at least one active and one comparison cell")
    return standardized_mean_difference(sim.outcome_sim[active], sim.outcome_sim[~active])
