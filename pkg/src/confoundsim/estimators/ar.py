"""Autoregressive model: one lagged outcome, year effects, treatment change."""

from __future__ import annotations

import numpy as np

from ..errors import RankDeficient
from ..numerics import cluster_robust_cov, dummy_columns, wls_fit
from .records import EstimateRecord, as_covariate_cube, check_panel_arrays


def estimate_ar(y, exposure, covariates=None, cluster: bool = True) -> EstimateRecord:
    """Unweighted OLS of ``Y_t`` on ``A_t - A_{t-1}``, covariates, ``Y_{t-1}``
    and year effects; the first year only supplies the lag.

    The reported effect is the coefficient on the treatment change. The lag
    coefficient is returned in ``diagnostics["lag_coefficient"]``.
    """
    y, a = check_panel_arrays(y, exposure)
    n, t = y.shape
    if t < 3:
        raise RankDeficient("need at least 3 years (one is used for the lag)")
    x = as_covariate_cube(covariates, (n, t))
    k = x.shape[2]
    change = (a[:, 1:] - a[:, :-1]).ravel()
    if not np.any(change != 0):
        raise RankDeficient("no treatment change in the panel")
    year_ids = np.tile(np.arange(1, t), n)
    unit_ids = np.repeat(np.arange(n), t - 1)
    design = np.column_stack(
        [change]
        + [x[:, 1:, j].ravel() for j in range(k)]
        + [y[:, :-1].ravel(), np.ones(n * (t - 1)), dummy_columns(year_ids)]
    )
    names = (("treatment_change",) + tuple(f"x{j}" for j in range(k)) + ("lag_outcome", "intercept")
             + tuple(f"year{j}" for j in range(2, t)))
    fit = wls_fit(design, y[:, 1:].ravel(), names=names)
    if 0 not in fit.kept:
        raise RankDeficient("treatment change is collinear with the other regressors")
    cov = cluster_robust_cov(fit, unit_ids) if cluster else fit.model_covariance
    return EstimateRecord("ar", float(fit.coefficients[0]), float(np.sqrt(cov[0, 0])),
                          {"lag_coefficient": fit["lag_outcome"], "n_obs": n * (t - 1)})
