"""Augmented synthetic control with staggered adoption.

Each treated unit gets its own synthetic control built from never-treated
donors (no partial pooling). Outcomes are demeaned by each unit's mean over
the treated unit's pre-period. The synthetic control is augmented with a
ridge regression of donor post-period outcomes on donor pre-period outcomes
and pre-period covariate means, and the treated unit's imbalance on those
features is pushed through the ridge coefficients::

    y_hat_s = sum_j w_j y_js + (f_i - sum_j w_j f_j)' eta_s

Per-unit gaps are averaged over the unit's post periods, then across treated
units with equal weight. The standard error is a leave-one-unit-out
jackknife over treated units and weighted donors.
"""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientPrePeriods, NoDonors, NoTreatedUnits
from ..numerics import ridge_path, simplex_ls
from ..panel import onset_index
from .records import EstimateRecord, as_covariate_cube, check_panel_arrays

LAMBDA_GRID = tuple(10.0 ** k for k in range(-3, 4))
MIN_PRE_PERIODS = 3
# donors whose summed weight is below this are not left out by the jackknife
WEIGHT_TOL = 1e-3


def _standardize(features: np.ndarray, ref: np.ndarray) -> np.ndarray:
    sd = ref.std(axis=0)
    sd = np.where(sd > 1e-12 * max(1.0, float(np.abs(ref).max(initial=0.0))), sd, 1.0)
    return features / sd


def _augmentation(donor_feat, treated_feat, donor_resp, weights, lambdas):
    """Bias-correction terms, one row per lambda and one column per response."""
    scaled = _standardize(np.vstack([donor_feat, treated_feat[None, :]]), donor_feat)
    d_scaled, t_scaled = scaled[:-1], scaled[-1]
    coefs = ridge_path(d_scaled, donor_resp, lambdas, intercept=True)
    imbalance = t_scaled - weights @ d_scaled
    # coefs[:, 0] is the intercept, which cancels in the imbalance
    return np.einsum("p,lpk->lk", imbalance, coefs[:, 1:, :])


def select_lambda(pre_donor: np.ndarray, pre_treated: np.ndarray, cov_donor: np.ndarray,
                  cov_treated: np.ndarray, weights: np.ndarray, lambdas=LAMBDA_GRID) -> float:
    """Leave-one-pre-period-out choice of the ridge penalty.

    Each pre period is held out in turn and predicted from the remaining
    ones, with the synthetic-control weights held fixed. The lowest penalty
    wins ties.
    """
    j, t0 = pre_donor.shape
    lambdas = np.asarray(lambdas, dtype=float)
    if t0 < 2:
        return float(lambdas[0])
    # fold s drops pre period s from the features and predicts it
    rest = np.array([np.delete(np.arange(t0), s) for s in range(t0)])
    feat = np.concatenate([
        np.transpose(pre_donor[:, rest], (1, 0, 2)),
        np.broadcast_to(cov_donor, (t0,) + cov_donor.shape),
    ], axis=2)  # (fold, donor, feature)
    tfeat = np.concatenate([pre_treated[rest], np.broadcast_to(cov_treated, (t0, cov_treated.size))], axis=1)
    sd = feat.std(axis=1)
    scale_ref = np.abs(feat).max(axis=(1, 2), initial=0.0)[:, None]
    sd = np.where(sd > 1e-12 * np.maximum(1.0, scale_ref), sd, 1.0)
    feat = feat / sd[:, None, :]
    tfeat = tfeat / sd
    centered = feat - feat.mean(axis=1, keepdims=True)
    resp = pre_donor.T - pre_donor.T.mean(axis=1, keepdims=True)  # (fold, donor)
    u, s_val, vt = np.linalg.svd(centered, full_matrices=False)
    keep = s_val > 1e-9 * s_val[:, :1]
    imbalance = tfeat - np.einsum("j,fjp->fp", weights, feat)
    a = np.einsum("fp,frp->fr", imbalance, vt)
    b = np.einsum("fjr,fj->fr", u, resp)
    shrink = np.where(keep[None], s_val[None] / (s_val[None] ** 2 + lambdas[:, None, None]), 0.0)
    corr = np.einsum("fr,lfr->lf", a * b, shrink)  # (lambda, fold)
    pred = (weights @ pre_donor)[None, :] + corr
    err = np.sum((pre_treated[None, :] - pred) ** 2, axis=1)
    best = np.flatnonzero(err <= err.min() * (1 + 1e-12) + 1e-300)[0]
    return float(lambdas[best])


def unit_gaps(y: np.ndarray, x: np.ndarray, unit: int, onset: int, donors: np.ndarray,
              lam: float | None = None, lambdas=LAMBDA_GRID, fixedeff: bool = True,
              weights: np.ndarray | None = None):
    """Post-period gaps for one treated unit plus fit diagnostics.

    ``weights`` skips the synthetic-control solve (used when a zero-weight
    donor is dropped, which leaves the simplex optimum unchanged).
    """
    pre = slice(0, onset)
    if onset < MIN_PRE_PERIODS:
        raise InsufficientPrePeriods(f"unit {unit} has {onset} pre-periods, need {MIN_PRE_PERIODS}")
    yy = y[np.concatenate([[unit], donors])]
    if fixedeff:
        yy = yy - yy[:, pre].mean(axis=1, keepdims=True)
    target, donor_y = yy[0], yy[1:]
    if weights is None:
        weights = simplex_ls(donor_y[:, pre].T, target[pre])

    cov = x[np.concatenate([[unit], donors])][:, pre, :].mean(axis=1)
    cov_t, cov_d = cov[0], cov[1:]
    if lam is None:
        lam = select_lambda(donor_y[:, pre], target[pre], cov_d, cov_t, weights, lambdas)
    donor_feat = np.column_stack([donor_y[:, pre], cov_d])
    treated_feat = np.concatenate([target[pre], cov_t])
    post_resp = donor_y[:, onset:]
    correction = _augmentation(donor_feat, treated_feat, post_resp, weights, [lam])[0]
    synthetic = weights @ post_resp + correction
    gaps = target[onset:] - synthetic
    pre_rmse = float(np.sqrt(np.mean((target[pre] - weights @ donor_y[:, pre]) ** 2)))
    return gaps, {"lambda": lam, "weights": weights, "correction": correction, "pre_rmse": pre_rmse}


def _donor_dropped_estimate(y, x, treated, onset, donors, drop, fits, fixedeff) -> float:
    """Overall estimate with donor ``drop`` removed, penalties held fixed."""
    keep = donors != drop
    sub = donors[keep]
    effects = np.empty(treated.size)
    for k, i in enumerate(treated):
        w_old = fits[k]["weights"]
        # a zero-weight donor leaves the simplex solution unchanged
        w = w_old[keep] if w_old[~keep][0] <= 0 else None
        gaps, _ = unit_gaps(y, x, i, int(onset[i]), sub, lam=fits[k]["lambda"], fixedeff=fixedeff, weights=w)
        effects[k] = gaps.mean()
    return float(effects.mean())


def estimate_ascm(y, exposure, covariates=None, nu: float = 0.0, lam: float | None = None,
                  fixedeff: bool = True, min_donors: int = 2, jackknife: str = "units") -> EstimateRecord:
    """Augmented synthetic control estimate of the average post-period effect.

    Treatment is binarized: the onset is the first year with positive
    exposure. ``lam=None`` selects the ridge penalty per treated unit by
    cross-validation over :data:`LAMBDA_GRID`.

    The standard error is a leave-one-unit-out jackknife. With
    ``jackknife="units"`` (default) the left-out units are every treated unit
    and every donor carrying weight in some treated unit's synthetic control;
    penalties stay at their full-sample values when a donor is dropped.
    ``jackknife="treated"`` leaves out treated units only. With fewer than
    two treated units the SE is NaN and ``diagnostics["se_missing"]`` is set.
    """
    if nu != 0.0:
        raise ValueError("only separate per-unit synthetic controls (nu=0) are supported")
    if jackknife not in ("units", "treated"):
        raise ValueError(f"unknown jackknife {jackknife!r}")
    y, a = check_panel_arrays(y, exposure)
    n, t = y.shape
    x = as_covariate_cube(covariates, (n, t))
    onset = onset_index(a)
    treated = np.flatnonzero(onset >= 0)
    donors = np.flatnonzero(onset < 0)
    if treated.size == 0:
        raise NoTreatedUnits("no treated units")
    if donors.size < min_donors:
        raise NoDonors(f"{donors.size} never-treated donors, need {min_donors}")

    effects = np.empty(treated.size)
    fits = []
    for k, i in enumerate(treated):
        gaps, info = unit_gaps(y, x, i, int(onset[i]), donors, lam=lam, fixedeff=fixedeff)
        effects[k] = gaps.mean()
        fits.append(info)
    lambdas_used = np.array([f["lambda"] for f in fits])
    corrections = np.array([float(np.mean(f["correction"])) for f in fits])
    entropy = np.empty(treated.size)
    for k, f in enumerate(fits):
        wpos = f["weights"][f["weights"] > 0]
        entropy[k] = float(-(wpos * np.log(wpos)).sum())
    weight_mass = np.sum([f["weights"] for f in fits], axis=0)

    alpha_hat = float(effects.mean())
    m = treated.size
    diagnostics = {
        "n_treated": int(m),
        "n_donors": int(donors.size),
        "mean_lambda": float(lambdas_used.mean()),
        "mean_correction": float(corrections.mean()),
        "mean_weight_entropy": float(entropy.mean()),
        "n_weighted_donors": int(np.sum(weight_mass > WEIGHT_TOL)),
    }
    if m < 2:
        diagnostics["se_missing"] = True
        return EstimateRecord("ascm", alpha_hat, float("nan"), diagnostics)
    loo = list((effects.sum() - effects) / (m - 1))
    if jackknife == "units" and donors.size > min_donors:
        for j in donors[weight_mass > WEIGHT_TOL]:
            loo.append(_donor_dropped_estimate(y, x, treated, onset, donors, j, fits, fixedeff))
    loo = np.asarray(loo)
    n_jk = loo.size
    var = (n_jk - 1) / n_jk * float(np.sum((loo - loo.mean()) ** 2))
    return EstimateRecord("ascm", alpha_hat, float(np.sqrt(var)), diagnostics)
