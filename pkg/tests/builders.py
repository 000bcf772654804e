"""Small synthetic panels with known answers."""

import numpy as np


def staggered_exposure(n, t, onsets, fractional=False, months=None):
    """Exposure grid from per-unit onset indices (-1 = never treated)."""
    a = np.zeros((n, t))
    for i, g in enumerate(onsets):
        if g < 0:
            continue
        a[i, g:] = 1.0
        if fractional and months is not None:
            a[i, g] = (13 - months[i]) / 12
    return a


def saturated_panel(tau, n=12, t=10, seed=0, covariates=False):
    """Noise-free unit + year effects plus a constant effect, staggered onsets."""
    rng = np.random.default_rng(seed)
    unit = rng.normal(5, 2, n)
    year = np.cumsum(rng.normal(0.2, 0.5, t))
    onsets = np.array([3 + (i % 4) if i < n // 2 else -1 for i in range(n)])
    a = staggered_exposure(n, t, onsets)
    y = unit[:, None] + year[None, :] + tau * a
    x = rng.uniform(3, 9, (n, t)) if covariates else None
    return y, a, x


def exact_donor_panel(tau=3.0, n_donors=6, t=10, onset=6, seed=0):
    """One treated unit equal to donor 2 before onset and donor 2 + tau after."""
    rng = np.random.default_rng(seed)
    donors = rng.normal(0, 1, (n_donors, t)).cumsum(axis=1) + rng.normal(0, 3, (n_donors, 1))
    treated = donors[2].copy()
    treated[onset:] += tau
    y = np.vstack([treated[None, :], donors])
    a = np.zeros_like(y)
    a[0, onset:] = 1.0
    return y, a


def ar_panel(rho=0.5, n=15, t=12, seed=0, onsets=None, tau=0.0):
    """Y_t = rho Y_{t-1} + year effect (+ tau * change in exposure), no noise."""
    rng = np.random.default_rng(seed)
    year = rng.normal(0, 1, t)
    y = np.zeros((n, t))
    y[:, 0] = rng.normal(10, 3, n)
    a = np.zeros((n, t)) if onsets is None else staggered_exposure(n, t, onsets)
    for j in range(1, t):
        y[:, j] = rho * y[:, j - 1] + year[j] + tau * (a[:, j] - a[:, j - 1])
    return y, a


def null_panel(rng, n=30, t=10, n_treated=10, rho=0.5, sd=1.0):
    """Exchangeable units: fixed effects plus AR(1) noise, random staggered adoption."""
    unit = rng.normal(0, 1, n)
    year = rng.normal(0, 1, t)
    e = np.zeros((n, t))
    e[:, 0] = rng.normal(0, sd / np.sqrt(1 - rho ** 2), n)
    for j in range(1, t):
        e[:, j] = rho * e[:, j - 1] + rng.normal(0, sd, n)
    y = 10 + unit[:, None] + year[None, :] + e
    onsets = np.full(n, -1)
    chosen = rng.choice(n, n_treated, replace=False)
    onsets[chosen] = rng.integers(4, t - 1, n_treated)
    x = rng.normal(6, 1, (n, t))
    return y, staggered_exposure(n, t, onsets), x
