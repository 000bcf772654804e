"""Two-way fixed effects difference-in-differences."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, RankDeficient
from ..numerics import cluster_robust_cov, demean_two_way, dummy_columns, wls_fit
from .records import EstimateRecord, as_covariate_cube, check_panel_arrays


def estimate_twfe(y, exposure, covariates=None, weights=None, cluster: bool = True) -> EstimateRecord:
    """Regress outcome on exposure, covariates and unit/year effects.

    ``weights`` are population counts, per unit ``(n,)`` or per cell
    ``(n, t)``. Fixed effects are swept out by two-way demeaning when the
    weights are constant within units, otherwise explicit dummies are used.
    """
    y, a = check_panel_arrays(y, exposure)
    n, t = y.shape
    if n < 2 or t < 2:
        raise RankDeficient("need at least 2 units and 2 years")
    if not (a > 0).any() or not (a == 0).any():
        raise RankDeficient("need treated and comparison state-years")
    x = as_covariate_cube(covariates, (n, t))
    k = x.shape[2]
    w = np.ones((n, t)) if weights is None else np.asarray(weights, dtype=float)
    if w.ndim == 1:
        if w.shape != (n,):
            raise DimensionMismatch(f"weights {w.shape} do not match {n} units")
        w = np.repeat(w[:, None], t, axis=1)
    if w.shape != (n, t):
        raise DimensionMismatch(f"weights {w.shape} do not match outcome {(n, t)}")

    names = ("treatment",) + tuple(f"x{j}" for j in range(k))
    cols = [a] + [x[:, :, j] for j in range(k)]
    unit_ids = np.repeat(np.arange(n), t)
    if np.all(w == w[:, :1]):
        uw = w[:, 0]
        design = np.column_stack([demean_two_way(c, uw).ravel() for c in cols])
        resp = demean_two_way(y, uw).ravel()
        fit = wls_fit(design, resp, w.ravel(), names=names, n_absorbed=n + t - 1)
    else:
        year_ids = np.tile(np.arange(t), n)
        design = np.column_stack([c.ravel() for c in cols] + [np.ones(n * t)]
                                 + [dummy_columns(unit_ids), dummy_columns(year_ids)])
        names_full = names + ("intercept",) + tuple(f"unit{i}" for i in range(1, n)) + tuple(
            f"year{j}" for j in range(1, t))
        fit = wls_fit(design, y.ravel(), w.ravel(), names=names_full)
    if 0 not in fit.kept:
        raise RankDeficient("treatment column is collinear with the fixed effects")
    cov = cluster_robust_cov(fit, unit_ids) if cluster else fit.model_covariance
    se = float(np.sqrt(cov[0, 0]))
    return EstimateRecord("twfe", float(fit.coefficients[0]), se,
                          {"n_obs": n * t, "n_clusters": n, "dof_residual": fit.dof_residual})
