"""Variance-versus-mean scaling of per-account hourly activity.

Each account contributes one point: the mean and the sample variance of
its hourly trade counts over a period, zero hours included.  Across
accounts the variance follows a power of the mean; the log-log slope
separates independent-arrival behavior (slope near 1) from activity
driven by a shared intensity factor (slope near 2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scaling import InsufficientDataError

MIN_DISTINCT_MEANS = 3


@dataclass(frozen=True)
class TaylorFit:
    """OLS line log10 var = beta*log10 mean + c over account points.

    se_beta is the usual OLS standard error of the slope, reported as a
    diagnostic only.
    """

    beta: float
    intercept: float
    r_squared: float
    n_points: int
    se_beta: float

    @property
    def prefactor(self) -> float:
        return 10.0 ** self.intercept


def mean_variance(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-row mean and sample variance (ddof=1) of an hourly count matrix."""
    counts = np.asarray(matrix, dtype=float)
    if counts.ndim != 2:
        raise ValueError("matrix must be 2-d (accounts x hours)")
    if counts.shape[1] < 2:
        raise ValueError("need at least two hour bins per account")
    if not np.all(np.isfinite(counts)):
        raise ValueError("matrix contains non-finite values")
    return counts.mean(axis=1), counts.var(axis=1, ddof=1)


def fit_taylor(means, variances) -> TaylorFit:
    """Fit log10 variance against log10 mean across accounts.

    Points with zero mean or zero variance carry no log-scale
    information and are dropped; at least three distinct means must
    survive.
    """
    mu = np.asarray(means, dtype=float)
    var = np.asarray(variances, dtype=float)
    if mu.shape != var.shape or mu.ndim != 1:
        raise ValueError("means and variances must be equally long 1-d arrays")
    keep = (mu > 0) & (var > 0) & np.isfinite(mu) & np.isfinite(var)
    mu, var = mu[keep], var[keep]
    log_mu = np.log10(mu)
    if np.unique(log_mu).size < MIN_DISTINCT_MEANS:
        raise InsufficientDataError(
            f"need at least {MIN_DISTINCT_MEANS} distinct positive means")
    log_var = np.log10(var)
    mx, my = log_mu.mean(), log_var.mean()
    dx, dy = log_mu - mx, log_var - my
    slope = float(dx @ dy / (dx @ dx))
    intercept = float(my - slope * mx)
    ss_res = float(((dy - slope * dx) ** 2).sum())
    ss_tot = float((dy ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    n = int(mu.size)
    se_beta = float(np.sqrt(max(ss_res, 0.0) / (n - 2) / float(dx @ dx))) if n > 2 else 0.0
    return TaylorFit(beta=slope, intercept=intercept, r_squared=r_squared,
                     n_points=n, se_beta=se_beta)


def fit_from_counts(matrix, activity_floor: int = 0) -> TaylorFit:
    """Floor-filter the matrix by non-zero hour bins, then fit.

    Rows with fewer than ``activity_floor`` non-zero bins are excluded
    before the mean-variance points are formed, matching the account
    selection of the stationarity analysis.
    """
    counts = np.asarray(matrix, dtype=float)
    mu, var = mean_variance(counts)
    if activity_floor > 0:
        keep = (counts != 0).sum(axis=1) >= activity_floor
        mu, var = mu[keep], var[keep]
    return fit_taylor(mu, var)


__all__ = [
    "MIN_DISTINCT_MEANS",
    "TaylorFit",
    "mean_variance",
    "fit_taylor",
    "fit_from_counts",
]
