from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..errors import DimensionMismatch

Z_95 = 1.96


@dataclass(frozen=True)
class EstimateRecord:
    method: str
    alpha_hat: float
    model_se: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def ci_low(self) -> float:
        return self.alpha_hat - Z_95 * self.model_se

    @property
    def ci_high(self) -> float:
        return self.alpha_hat + Z_95 * self.model_se

    @property
    def se_available(self) -> bool:
        return math.isfinite(self.model_se)

    def covers(self, truth: float) -> bool:
        return self.ci_low <= truth <= self.ci_high

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha_hat": self.alpha_hat,
            "model_se": self.model_se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateRecord":
        return cls(d["method"], float(d["alpha_hat"]), float(d["model_se"]), dict(d.get("diagnostics", {})))


@dataclass(frozen=True, eq=False)
class GroupTimeATT:
    g: int
    t: int
    att: float
    influence: np.ndarray = field(repr=False)


def as_covariate_cube(covariates, shape: tuple[int, int]) -> np.ndarray:
    """Covariates as a ``(units, years, k)`` array (``k`` may be 0)."""
    if covariates is None:
        return np.zeros(shape + (0,))
    c = np.asarray(covariates, dtype=float)
    if c.ndim == 2:
        c = c[:, :, None]
    if c.shape[:2] != shape:
        raise DimensionMismatch(f"covariates {c.shape} do not match outcome {shape}")
    return c


def check_panel_arrays(y, exposure) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    a = np.asarray(exposure, dtype=float)
    if y.ndim != 2 or y.shape != a.shape:
        raise DimensionMismatch(f"outcome {y.shape} and exposure {a.shape} must be matching 2-D grids")
    return y, a
