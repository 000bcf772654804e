"""Estimation kernels: weighted least squares, cluster-robust covariance,
logistic regression, ridge regression and simplex-constrained least squares.

All kernels are deterministic and side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    EmptyDonorPool,
    NonConvergence,
    RankDeficient,
    Separation,
    SingleCluster,
)

RANK_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class FitResult:
    """Result of a linear or logistic fit.

    ``coefficients`` and ``model_covariance`` are indexed by the original
    design columns; columns dropped for collinearity hold NaN. ``kept`` lists
    the retained columns.
    """

    coefficients: np.ndarray
    model_covariance: np.ndarray
    residuals: np.ndarray
    dof_residual: int
    names: tuple[str, ...]
    kept: np.ndarray
    cluster_ids: Optional[np.ndarray] = None
    # internals for sandwich estimators
    design: np.ndarray = field(default=None, repr=False)
    weights: np.ndarray = field(default=None, repr=False)
    bread: np.ndarray = field(default=None, repr=False)
    n_absorbed: int = 0

    def __getitem__(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    @property
    def n_obs(self) -> int:
        return self.residuals.shape[0]

    @property
    def rank(self) -> int:
        return int(self.kept.size)

    def se(self, cov: Optional[np.ndarray] = None) -> np.ndarray:
        cov = self.model_covariance if cov is None else cov
        return np.sqrt(np.diag(cov))


def _embed(mat_kept: np.ndarray, kept: np.ndarray, p: int) -> np.ndarray:
    full = np.full((p, p), np.nan)
    full[np.ix_(kept, kept)] = mat_kept
    return full


def _check_xy(design, y):
    x = np.asarray(design, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"design {x.shape} incompatible with response {y.shape}")
    return x, y


def wls_fit(design, y, weights=None, names: Optional[Sequence[str]] = None,
            n_absorbed: int = 0) -> FitResult:
    """Weighted least squares via column-pivoted QR.

    Collinear columns are dropped (their coefficients are NaN). ``n_absorbed``
    counts parameters already partialled out of ``design``/``y`` (e.g. fixed
    effects removed by demeaning) and enters the residual degrees of freedom.
    """
    x, y = _check_xy(design, y)
    n, p = x.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise DimensionMismatch(f"weights shape {w.shape} != ({n},)")
    if np.any(~(w > 0)):
        raise ValueError("weights must be positive")
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))
    if len(names) != p:
        raise DimensionMismatch("one name per design column required")
    if p == 0:
        raise RankDeficient("empty design")

    sw = np.sqrt(w)
    xw = x * sw[:, None]
    yw = y * sw
    q, r, piv = scipy.linalg.qr(xw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        raise RankDeficient("design has no non-zero column")
    rank = int(np.sum(diag > RANK_RTOL * diag[0]))
    kept_piv = piv[:rank]
    r1 = r[:rank, :rank]
    beta_piv = scipy.linalg.solve_triangular(r1, q[:, :rank].T @ yw)
    order = np.argsort(kept_piv)
    kept = kept_piv[order]
    beta_kept = beta_piv[order]

    xk = x[:, kept]
    resid = y - xk @ beta_kept
    dof = n - rank - int(n_absorbed)
    if dof < 1:
        raise RankDeficient(f"no residual degrees of freedom (n={n}, rank={rank}, absorbed={n_absorbed})")
    rinv = scipy.linalg.solve_triangular(r1, np.eye(rank))
    bread_piv = rinv @ rinv.T
    bread = bread_piv[np.ix_(order, order)]
    sigma2 = float(np.sum(w * resid * resid) / dof)

    coef = np.full(p, np.nan)
    coef[kept] = beta_kept
    return FitResult(
        coefficients=coef,
        model_covariance=_embed(sigma2 * bread, kept, p),
        residuals=resid,
        dof_residual=dof,
        names=names,
        kept=kept,
        design=xk,
        weights=w,
        bread=bread,
        n_absorbed=int(n_absorbed),
    )


def cluster_robust_cov(fit: FitResult, cluster_ids) -> np.ndarray:
    """CR1 sandwich covariance clustered on ``cluster_ids``.

    Small-sample factor ``G/(G-1) * (n-1)/(n-k)`` with ``k`` the fitted rank
    plus any absorbed parameters.
    """
    g = np.asarray(cluster_ids)
    n = fit.n_obs
    if g.shape != (n,):
        raise DimensionMismatch(f"cluster ids shape {g.shape} != ({n},)")
    labels, inv = np.unique(g, return_inverse=True)
    n_clusters = labels.size
    if n_clusters < 2:
        raise SingleCluster("need at least two clusters")
    scores = fit.design * (fit.weights * fit.residuals)[:, None]
    summed = np.zeros((n_clusters, scores.shape[1]))
    np.add.at(summed, inv, scores)
    meat = summed.T @ summed
    k = fit.rank + fit.n_absorbed
    scale = n_clusters / (n_clusters - 1) * (n - 1) / (n - k)
    cov = scale * fit.bread @ meat @ fit.bread
    cov = 0.5 * (cov + cov.T)
    return _embed(cov, fit.kept, fit.coefficients.size)


def logistic_fit(design, y, max_iter: int = 100, tol: float = 1e-8,
                 names: Optional[Sequence[str]] = None) -> FitResult:
    """Logistic regression by iteratively reweighted least squares.

    Stops when the score norm drops below ``tol``. Raises :class:`Separation`
    as soon as a fitted probability gets within 1e-10 of 0 or 1.
    """
    x, y = _check_xy(design, y)
    n, p = x.shape
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("response must be binary")
    if y.min() == y.max():
        raise Separation("response has a single class")
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))
    beta = np.zeros(p)
    eps = 1e-10
    for _ in range(max_iter + 1):
        prob = expit(x @ beta)
        if np.any(prob > 1 - eps) or np.any(prob < eps):
            raise Separation("fitted probabilities reached 0 or 1")
        score = x.T @ (y - prob)
        wts = prob * (1 - prob)
        info = x.T @ (x * wts[:, None])
        if np.linalg.norm(score) < tol:
            break
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise RankDeficient("singular Fisher information") from None
        beta = beta + step
    else:
        raise NonConvergence(f"IRLS did not converge in {max_iter} iterations")
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise RankDeficient("singular Fisher information") from None
    kept = np.arange(p)
    return FitResult(
        coefficients=beta,
        model_covariance=0.5 * (cov + cov.T),
        residuals=y - prob,
        dof_residual=n - p,
        names=names,
        kept=kept,
        design=x,
        weights=wts,
        bread=cov,
    )


def ridge_path(design, y, lambdas: Sequence[float], intercept: bool = True) -> np.ndarray:
    """Ridge solutions for several penalties from one SVD.

    Returns an array of shape ``(len(lambdas), p + intercept[, k])`` where a
    2-D ``y`` gives ``k`` responses. The intercept (first entry) is never
    penalized.
    """
    x = np.asarray(design, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    yy = np.asarray(y, dtype=float)
    if yy.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"design {x.shape} incompatible with response {yy.shape}")
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 0):
        raise ValueError("lambda must be >= 0")
    if intercept:
        xm = x.mean(axis=0)
        ym = yy.mean(axis=0)
        xc = x - xm
        yc = yy - ym
    else:
        xc, yc = x, yy
    u, s, vt = np.linalg.svd(xc, full_matrices=False)
    keep = s > RANK_RTOL * (s[0] if s.size else 0.0)
    uty = u.T @ yc
    out = []
    for lam in lambdas:
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(keep, s / (s * s + lam), 0.0)
        beta = vt.T @ (f[:, None] * uty if uty.ndim == 2 else f * uty)
        if intercept:
            b0 = ym - xm @ beta
            beta = np.vstack([b0[None, :], beta]) if beta.ndim == 2 else np.concatenate([[b0], beta])
        out.append(beta)
    return np.stack(out)


def ridge_fit(design, y, lam: float, intercept: bool = True) -> np.ndarray:
    """``argmin ||y - b0 - X b||^2 + lam ||b||^2``.

    With ``intercept=True`` the result is ``[b0, b...]`` and ``b0`` is not
    penalized; otherwise it is the plain ``(X'X + lam I)^-1 X'y`` solution.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return ridge_path(design, y, [lam], intercept=intercept)[0]


# -- simplex-constrained least squares -----------------------------------------

def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplex_gap(q: np.ndarray, c: np.ndarray, w: np.ndarray) -> float:
    """Frank-Wolfe gap of ``0.5 w'Qw - c'w`` at ``w``; bounds suboptimality."""
    g = q @ w - c
    return float(w @ g - g.min())


def _active_set(q, c, start, tol_obj, max_iter):
    j_count = c.size
    w = np.zeros(j_count)
    w[start] = 1.0
    free = [start]
    for _ in range(max_iter):
        g = q @ w - c
        lam = g - g[free].mean()
        lam[free] = 0.0
        j_add = int(np.argmin(lam))
        if lam[j_add] >= -tol_obj:
            return w
        free.append(j_add)
        free.sort()
        # solve the equality-constrained subproblem, stepping back while infeasible
        for _ in range(j_count + 1):
            f = np.array(free)
            m = f.size
            kkt = np.zeros((m + 1, m + 1))
            kkt[:m, :m] = q[np.ix_(f, f)]
            kkt[:m, m] = 1.0
            kkt[m, :m] = 1.0
            rhs = np.concatenate([c[f], [1.0]])
            try:
                z = np.linalg.solve(kkt, rhs)[:m]
            except np.linalg.LinAlgError:
                return None
            if np.all(z > 0):
                w = np.zeros(j_count)
                w[f] = z
                break
            wf = w[f]
            neg = z <= 0
            ratios = np.where(neg, wf / np.where(neg, wf - z, 1.0), np.inf)
            step = float(ratios.min())
            wf = wf + step * (z - wf)
            drop = wf <= 1e-15
            drop[int(np.argmin(ratios))] = True
            wf[drop] = 0.0
            w = np.zeros(j_count)
            w[f] = wf
            free = [int(j) for j in f[~drop]]
            if not free:
                return None
            w /= w.sum()
        else:
            return None
    return None


def _projected_gradient(q, c, w, tol_obj, max_iter):
    lip = float(np.linalg.eigvalsh(q)[-1]) if q.size else 0.0
    if lip <= 0:
        return w
    x_prev = w.copy()
    yk = w.copy()
    tk = 1.0
    for _ in range(max_iter):
        x_new = project_simplex(yk - (q @ yk - c) / lip)
        if simplex_gap(q, c, x_new) <= tol_obj:
            return x_new
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * tk * tk))
        yk = x_new + ((tk - 1) / t_new) * (x_new - x_prev)
        # restart on non-monotone objective
        if (0.5 * x_new @ q @ x_new - c @ x_new) > (0.5 * x_prev @ q @ x_prev - c @ x_prev):
            yk = x_new.copy()
            t_new = 1.0
        x_prev, tk = x_new, t_new
    return x_prev


def simplex_ls(donor_matrix, target, tol: float = 1e-8, max_iter: int = 10_000) -> np.ndarray:
    """Weights ``w >= 0, sum(w) = 1`` minimizing ``||target - donor_matrix @ w||^2``.

    Exact primal active-set solver started from the best single donor (lowest
    index on ties); accelerated projected gradient takes over if the active
    set stalls. The result is verified to stationarity: the Frank-Wolfe gap,
    an upper bound on the objective excess, must not exceed
    ``tol * max(1, ||target||^2)``.
    """
    d = np.asarray(donor_matrix, dtype=float)
    t = np.asarray(target, dtype=float)
    if d.ndim == 1:
        d = d[:, None]
    if d.ndim != 2 or d.shape[1] == 0:
        raise EmptyDonorPool("no donors")
    if d.shape[0] != t.shape[0] or t.ndim != 1:
        raise DimensionMismatch(f"donor matrix {d.shape} incompatible with target {t.shape}")
    if d.shape[0] == 0:
        raise DimensionMismatch("need at least one pre-period")
    scale = max(1.0, float(t @ t))
    q = d.T @ d
    c = d.T @ t
    # objective in 0.5 w'Qw - c'w form is half the squared residual minus a constant
    tol_obj = 0.5 * tol * scale
    start = int(np.argmin(np.sum((d - t[:, None]) ** 2, axis=0)))
    w = _active_set(q, c, start, tol_obj * 1e-3, max_iter)
    if w is None or simplex_gap(q, c, w) > tol_obj:
        w0 = np.zeros(d.shape[1])
        w0[start] = 1.0
        w = _projected_gradient(q, c, w0 if w is None else w, tol_obj, max_iter)
    if simplex_gap(q, c, w) > tol_obj:
        raise NonConvergence("simplex least squares did not reach stationarity")
    w = np.maximum(w, 0.0)
    return w / w.sum()


# -- fixed effects ---------------------------------------------------------------

def demean_two_way(values: np.ndarray, unit_weights=None) -> np.ndarray:
    """Within transformation for a balanced ``(units, years)`` panel.

    With weights constant within units the weighted two-way projection has
    the closed form ``x - xbar_i. - xbar^w_.t + xbar^w_..``.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    w = np.ones(n) if unit_weights is None else np.asarray(unit_weights, dtype=float)
    w = w / w.sum()
    unit_mean = v.mean(axis=1, keepdims=True)
    year_mean = np.tensordot(w, v, axes=(0, 0))[None, ...]
    grand = np.tensordot(w, unit_mean, axes=(0, 0))[None, ...]
    return v - unit_mean - year_mean + grand


def dummy_columns(codes: np.ndarray, drop_first: bool = True) -> np.ndarray:
    codes = np.asarray(codes)
    levels = np.unique(codes)
    if drop_first:
        levels = levels[1:]
    return (codes[:, None] == levels[None, :]).astype(float)
