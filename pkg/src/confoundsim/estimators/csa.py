"""Callaway-Sant'Anna group-time ATTs with the doubly-robust panel estimator.

For cohort ``g`` (units first exposed in year ``g``) and each ``t >= g``:

* long difference ``dY = Y_t - Y_{g-1}``;
* logistic propensity of cohort membership on ``[1, X_{g-1}]`` among the
  cohort and the comparison units;
* OLS of ``dY`` on ``[1, X_{g-1}]`` among comparison units;
* ``ATT(g,t) = mean_cohort(dY - m(X)) - weighted_mean_comparison(dY - m(X))``
  with odds weights ``p/(1-p)`` (Sant'Anna and Zhao's DR estimator).

ATT(g,t) cells are averaged with weights proportional to cohort size and the
standard error comes from the aggregated influence function, including the
term for estimating the cohort shares.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import EmptyCohort, NoNeverTreated, NoTreatedUnits, RankDeficient, Separation
from ..numerics import logistic_fit
from ..panel import onset_index
from .records import EstimateRecord, GroupTimeATT, as_covariate_cube, check_panel_arrays

PSCORE_MAX = 1 - 1e-6
TRIM_LEVEL = 0.995


def drdid_panel(delta_y: np.ndarray, treated: np.ndarray, or_design: np.ndarray,
                ps_design: np.ndarray | None = None):
    """Doubly-robust DID for two-period panel data.

    ``delta_y`` may hold several outcome differences as columns; the
    propensity model is shared across them. Returns ``(att, influence)`` with
    ``influence`` of shape ``(n, m)``, scaled so that ``var(att) ~
    mean(influence**2) / n``.
    """
    dy = np.asarray(delta_y, dtype=float)
    squeeze = dy.ndim == 1
    if squeeze:
        dy = dy[:, None]
    d = np.asarray(treated, dtype=float)
    n = d.size
    z = np.asarray(or_design, dtype=float)
    zp = z if ps_design is None else np.asarray(ps_design, dtype=float)
    if d.sum() == 0 or d.sum() == n:
        raise EmptyCohort("need both cohort and comparison units")

    ps_fit = logistic_fit(zp, d)
    ps = np.minimum(expit(zp @ ps_fit.coefficients), PSCORE_MAX)
    trim = np.where(d == 0, ps < TRIM_LEVEL, True)

    ctrl = d == 0
    zc = z[ctrl]
    xtx = zc.T @ zc
    try:
        beta = np.linalg.solve(xtx, zc.T @ dy[ctrl])
    except np.linalg.LinAlgError:
        raise RankDeficient("outcome regression design is singular") from None
    resid = dy - z @ beta  # (n, m)

    w_treat = trim * d
    w_cont = trim * ps * (1 - d) / (1 - ps)
    att_treat = w_treat[:, None] * resid
    att_cont = w_cont[:, None] * resid
    eta_treat = att_treat.mean(axis=0) / w_treat.mean()
    eta_cont = att_cont.mean(axis=0) / w_cont.mean()
    att = eta_treat - eta_cont

    # outcome-regression estimation effect
    xpx_inv = np.linalg.inv((z * (1 - d)[:, None]).T @ z / n)
    # asy_lin_rep_ols[i, :, m] = (1-d_i) resid_im z_i' XpX^-1
    lin_ols = ((1 - d)[:, None, None] * z[:, :, None] * resid[:, None, :])
    lin_ols = np.einsum("ipm,pq->iqm", lin_ols, xpx_inv)
    # propensity estimation effect
    score_ps = (d - ps)[:, None] * zp
    lin_ps = score_ps @ (ps_fit.model_covariance * n)

    inf_treat_1 = att_treat - w_treat[:, None] * eta_treat[None, :]
    m1 = (w_treat[:, None] * z).mean(axis=0)
    inf_treat_2 = np.einsum("iqm,q->im", lin_ols, m1)
    inf_treat = (inf_treat_1 - inf_treat_2) / w_treat.mean()

    inf_cont_1 = att_cont - w_cont[:, None] * eta_cont[None, :]
    m2 = np.einsum("i,im,ip->pm", w_cont, resid - eta_cont[None, :], zp) / n
    inf_cont_2 = lin_ps @ m2
    m3 = (w_cont[:, None] * z).mean(axis=0)
    inf_cont_3 = np.einsum("iqm,q->im", lin_ols, m3)
    inf_control = (inf_cont_1 + inf_cont_2 - inf_cont_3) / w_cont.mean()

    inf = inf_treat - inf_control
    if squeeze:
        return float(att[0]), inf[:, 0]
    return att, inf


def group_time_atts(y, exposure, covariates=None, control_group: str = "nevertreated"):
    """All post-treatment ATT(g,t) cells with influence functions on the full
    unit index (zero outside each cell's estimation sample).

    Returns ``(cells, cohort_of_unit, diagnostics)``; cohorts are year
    indices and ``-1`` marks never-treated units.
    """
    y, a = check_panel_arrays(y, exposure)
    n, t = y.shape
    x = as_covariate_cube(covariates, (n, t))
    onset = onset_index(a)
    if not np.any(onset >= 0):
        raise NoTreatedUnits("no treated units")
    never = onset < 0
    if not never.any() and control_group == "nevertreated":
        raise NoNeverTreated("no never-treated comparison units")
    if control_group not in ("nevertreated", "notyettreated"):
        raise ValueError(f"unknown control_group {control_group!r}")

    cohorts = [int(g) for g in np.unique(onset[onset >= 0])]
    dropped = [g for g in cohorts if g < 1]
    cohorts = [g for g in cohorts if g >= 1]
    if not cohorts:
        raise EmptyCohort("every cohort is treated from the first year")
    cells: list[GroupTimeATT] = []
    n_fallback = 0
    for g in cohorts:
        base = g - 1
        members = onset == g
        if control_group == "nevertreated":
            blocks = [(list(range(g, t)), never)]
        else:
            # comparison units not yet treated by period t (nor by the base period)
            blocks = [([tt], never | (onset > max(tt, base))) for tt in range(g, t)]
        for periods, ctrl in blocks:
            sample = members | ctrl
            if not ctrl.any():
                raise NoNeverTreated(f"no comparison units for cohort {g}")
            idx = np.flatnonzero(sample)
            d = members[idx].astype(float)
            z = np.column_stack([np.ones(idx.size), x[idx, base, :]])
            dy = y[idx][:, periods] - y[idx, base][:, None]
            try:
                att, inf = drdid_panel(dy, d, z)
            except Separation:
                # covariates separate the cohort: fall back to a constant propensity,
                # i.e. outcome-regression DID
                n_fallback += 1
                att, inf = drdid_panel(dy, d, z, ps_design=np.ones((idx.size, 1)))
            scale = n / idx.size
            for col, tt in enumerate(periods):
                full = np.zeros(n)
                full[idx] = scale * inf[:, col]
                cells.append(GroupTimeATT(g, tt, float(att[col]), full))
    diag = {"n_cohorts": len(cohorts), "n_cells": len(cells), "n_pscore_fallback": n_fallback,
            "dropped_cohorts": dropped}
    return cells, onset, diag


def aggregate_simple(cells: list[GroupTimeATT], cohort_of_unit: np.ndarray) -> tuple[float, float]:
    """Cohort-size weighted mean of the post-treatment cells and its SE."""
    n = cohort_of_unit.size
    groups = np.array([c.g for c in cells])
    att = np.array([c.att for c in cells])
    inf = np.column_stack([c.influence for c in cells])  # (n, cells)
    member = (cohort_of_unit[:, None] == groups[None, :]).astype(float)
    pg = member.mean(axis=0)
    total = pg.sum()
    weights = pg / total
    # influence of estimating the cohort shares
    if1 = (member - pg[None, :]) / total
    if2 = np.outer((member - pg[None, :]).sum(axis=1), pg / total**2)
    wif = if1 - if2
    agg_inf = inf @ weights + wif @ att
    alpha = float(weights @ att)
    se = float(np.sqrt(np.mean(agg_inf**2) / n))
    return alpha, se


def estimate_csa(y, exposure, covariates=None, control_group: str = "nevertreated") -> EstimateRecord:
    cells, cohort_of_unit, diag = group_time_atts(y, exposure, covariates, control_group)
    alpha, se = aggregate_simple(cells, cohort_of_unit)
    return EstimateRecord("csa", alpha, se, diag)
