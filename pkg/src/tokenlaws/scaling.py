"""Log-binned fit of trade volume against partner count.

Sender profiles give one (N, V) point per account: N distinct partners,
V total trades.  The fit collapses the scatter with geometric bins over
N, then regresses log10 of the per-bin mean V on log10 of the per-bin
abscissa.  The slope is the scaling exponent.

The abscissa of a bin is the geometric mean of the member N values, not
of the bin edges.  With that convention a scatter whose distinct N
values land in separate bins refits exactly, so binning a clean power
law V = N**alpha returns alpha to rounding error regardless of n_bins.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_N_BINS = 20


class InsufficientDataError(ValueError):
    """Fewer usable points than the fit needs."""


@dataclass(frozen=True)
class BinnedScatter:
    """Non-empty bins of a (N, V) scatter.

    abscissa : geometric mean of the member N values per bin
    mean_v   : arithmetic mean of the member V values per bin
    counts   : members per bin
    edges    : the full geometric edge grid the bins were cut from
    """

    abscissa: np.ndarray
    mean_v: np.ndarray
    counts: np.ndarray
    edges: np.ndarray

    def __len__(self) -> int:
        return len(self.abscissa)


@dataclass(frozen=True)
class ScalingFit:
    """OLS line through the log-log scatter: log10 V = alpha*log10 N + c."""

    alpha: float
    intercept: float
    r_squared: float
    n_points: int
    binned: bool

    @property
    def prefactor(self) -> float:
        return 10.0 ** self.intercept


def _clean(n_values, v_values) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n_values, dtype=float)
    v = np.asarray(v_values, dtype=float)
    if n.ndim != 1 or v.ndim != 1 or n.shape != v.shape:
        raise ValueError("n_values and v_values must be 1-d and equally long")
    if n.size == 0:
        raise InsufficientDataError("no (N, V) points")
    if not (np.all(np.isfinite(n)) and np.all(np.isfinite(v))):
        raise ValueError("non-finite values in scatter")
    if np.any(n <= 0) or np.any(v <= 0):
        raise ValueError("N and V must be positive for log-scale fitting")
    return n, v


def log_bin(n_values, v_values, n_bins: int = DEFAULT_N_BINS) -> BinnedScatter:
    """Cut the scatter into geometric N bins and average V within each.

    Bins are right-open except the last, which closes so the maximum N
    stays in.  Empty bins are dropped.  If every N is identical the
    whole scatter is one bin.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    n, v = _clean(n_values, v_values)
    log_n = np.log10(n)
    lo, hi = log_n.min(), log_n.max()
    if lo == hi:
        return BinnedScatter(
            abscissa=np.array([10.0 ** lo]),
            mean_v=np.array([v.mean()]),
            counts=np.array([n.size]),
            edges=10.0 ** np.array([lo, hi]),
        )
    log_edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.searchsorted(log_edges, log_n, side="right") - 1
    np.clip(idx, 0, n_bins - 1, out=idx)
    abscissa, mean_v, counts = [], [], []
    for b in range(n_bins):
        members = idx == b
        if not members.any():
            continue
        abscissa.append(10.0 ** log_n[members].mean())
        mean_v.append(v[members].mean())
        counts.append(int(members.sum()))
    return BinnedScatter(
        abscissa=np.array(abscissa),
        mean_v=np.array(mean_v),
        counts=np.array(counts, dtype=np.int64),
        edges=10.0 ** log_edges,
    )


def _ols_loglog(x: np.ndarray, y: np.ndarray, *, binned: bool) -> ScalingFit:
    log_x = np.log10(x)
    log_y = np.log10(y)
    if np.unique(log_x).size < 2:
        raise InsufficientDataError("need at least two distinct abscissae")
    mx, my = log_x.mean(), log_y.mean()
    dx, dy = log_x - mx, log_y - my
    slope = float(dx @ dy / (dx @ dx))
    intercept = float(my - slope * mx)
    ss_res = float(((dy - slope * dx) ** 2).sum())
    ss_tot = float((dy ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(alpha=slope, intercept=intercept, r_squared=r_squared,
                      n_points=int(x.size), binned=binned)


def fit_alpha(n_values, v_values, n_bins: int = DEFAULT_N_BINS,
              *, binned: bool = True) -> ScalingFit:
    """Fit log10 V against log10 N, log-binned by default.

    ``binned=False`` regresses on the raw scatter instead, one point per
    account.  Both paths need at least two distinct abscissae.
    """
    if binned:
        cut = log_bin(n_values, v_values, n_bins)
        return _ols_loglog(cut.abscissa, cut.mean_v, binned=True)
    n, v = _clean(n_values, v_values)
    return _ols_loglog(n, v, binned=False)


def fit_from_binned(cut: BinnedScatter) -> ScalingFit:
    """Fit an already-binned scatter (used by the report writer)."""
    return _ols_loglog(cut.abscissa, cut.mean_v, binned=True)


__all__ = [
    "DEFAULT_N_BINS",
    "InsufficientDataError",
    "BinnedScatter",
    "ScalingFit",
    "log_bin",
    "fit_alpha",
    "fit_from_binned",
]
