"""KPSS statistic, bandwidth rules, and the per-account stationary share."""
import math
import warnings

import numpy as np
import pytest

from tokenlaws.stationarity import (
    CRITICAL_VALUES,
    KpssResult,
    StationaryShare,
    kpss_test,
    stationary_fraction,
)


def kpss_by_hand(x, lag, regression="level"):
    """Loop-level reimplementation used as the oracle."""
    x = np.asarray(x, dtype=float)
    t = len(x)
    if regression == "level":
        eps = x - x.mean()
    else:
        tt = np.arange(1, t + 1)
        slope, intercept = np.polyfit(tt, x, 1)
        eps = x - (intercept + slope * tt)
    s2 = sum(e * e for e in eps) / t
    for s in range(1, lag + 1):
        gamma = sum(eps[i] * eps[i - s] for i in range(s, t)) / t
        s2 += 2.0 * (1.0 - s / (lag + 1.0)) * gamma
    partial = 0.0
    total = 0.0
    for e in eps:
        partial += e
        total += partial * partial
    return total / (t * t * s2)


@pytest.mark.parametrize("seed,lag,regression", [
    (0, 0, "level"), (1, 4, "level"), (2, 9, "level"),
    (3, 0, "trend"), (4, 6, "trend"),
])
def test_statistic_matches_hand_computation(seed, lag, regression):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=120).cumsum() if seed % 2 else rng.normal(size=120)
    result = kpss_test(x, regression=regression, bandwidth=lag)
    assert result.lm == pytest.approx(kpss_by_hand(x, lag, regression), rel=1e-12)
    assert result.bandwidth == lag


def test_matches_statsmodels_at_fixed_lags():
    sm = pytest.importorskip("statsmodels.tsa.stattools")
    rng = np.random.default_rng(17)
    x = rng.normal(size=500)
    for nlags in (0, 3, 12):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stat, pval, _, _ = sm.kpss(x, regression="c", nlags=nlags)
        mine = kpss_test(x, bandwidth=nlags)
        assert mine.lm == pytest.approx(stat, abs=1e-12)
        assert mine.p_value == pytest.approx(pval, abs=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stat, pval, _, _ = sm.kpss(x, regression="ct", nlags=7)
    mine = kpss_test(x, regression="trend", bandwidth=7)
    assert mine.lm == pytest.approx(stat, abs=1e-12)
    assert mine.p_value == pytest.approx(pval, abs=1e-12)


def test_p_value_interpolation_and_clamping():
    stats_level = [c for c, _ in CRITICAL_VALUES["level"]]
    rng = np.random.default_rng(2)
    x = rng.normal(size=200)
    r = kpss_test(x, bandwidth=0)
    assert 0.01 <= r.p_value <= 0.10
    # Exactly at a table entry the interpolated p is the table p.
    probe = KpssResult(lm=stats_level[1], p_value=0.0, bandwidth=0,
                       regression="level", n_obs=0)
    from tokenlaws.stationarity import _p_from_tables
    assert _p_from_tables(probe.lm, "level") == pytest.approx(0.05)
    assert _p_from_tables(0.0, "level") == 0.10
    assert _p_from_tables(5.0, "level") == 0.01
    mid = 0.5 * (stats_level[0] + stats_level[1])
    assert _p_from_tables(mid, "level") == pytest.approx(0.075)


def test_schwert_bandwidth_rule():
    rng = np.random.default_rng(3)
    x = rng.normal(size=1000)
    r = kpss_test(x, bandwidth="schwert")
    assert r.bandwidth == int(4.0 * (1000 / 100.0) ** 0.25)
    assert r.bandwidth == 7


def test_auto_bandwidth_formula():
    rng = np.random.default_rng(4)
    x = rng.normal(size=300)
    eps = x - x.mean()
    t = eps.size
    n_pre = int(4.0 * (t / 100.0) ** (2.0 / 9.0))
    s = [float(eps[j:] @ eps[: t - j]) / t for j in range(n_pre + 1)]
    a_hat = (sum(j * s[j] for j in range(1, n_pre + 1))
             / (s[0] + 2.0 * sum(s[1:]))) ** 2
    expected = min(int(1.1447 * (a_hat * t) ** (1.0 / 3.0)), t - 1)
    assert kpss_test(x).bandwidth == expected


def test_degenerate_series():
    flat = kpss_test(np.full(50, 3.0))
    assert flat.degenerate and flat.lm == 0.0 and flat.p_value == 0.10
    assert flat.stationary_at_5pct
    line = kpss_test(2.0 + 0.5 * np.arange(50.0), regression="trend")
    assert line.degenerate and line.stationary_at_5pct


def test_input_validation():
    with pytest.raises(ValueError):
        kpss_test(np.zeros(9))
    with pytest.raises(ValueError):
        kpss_test(np.zeros((5, 5)))
    with pytest.raises(ValueError):
        kpss_test([1.0, np.inf] + [0.0] * 10)
    with pytest.raises(ValueError):
        kpss_test(np.arange(20.0), regression="quadratic")
    with pytest.raises(ValueError):
        kpss_test(np.arange(20.0), bandwidth=-1)
    with pytest.raises(ValueError):
        kpss_test(np.arange(20.0), bandwidth=20)


def test_level_rejects_trending_series():
    t = np.arange(500.0)
    rng = np.random.default_rng(5)
    x = 0.05 * t + rng.normal(size=500)
    level = kpss_test(x, regression="level")
    trend = kpss_test(x, regression="trend")
    assert not level.stationary_at_5pct
    assert trend.stationary_at_5pct


def test_size_on_iid_noise():
    rejections = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        r = kpss_test(rng.normal(size=1000))
        rejections += not r.stationary_at_5pct
    assert 1 <= rejections <= 10


def test_power_on_random_walks():
    rejections = 0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        walk = rng.normal(size=1000).cumsum()
        rejections += not kpss_test(walk).stationary_at_5pct
    assert rejections >= 48


def test_stationary_fraction_skips_inactive_rows():
    rng = np.random.default_rng(6)
    active = rng.poisson(3.0, size=(5, 200))
    quiet = np.zeros((3, 200), dtype=int)
    quiet[:, 0] = 1
    share = stationary_fraction(np.vstack([active, quiet]), activity_floor=10)
    assert share.n_tested == 5
    assert share.n_skipped == 3
    assert share.n_stationary >= 4
    assert share.fraction == share.n_stationary / 5


def test_stationary_fraction_empty():
    share = stationary_fraction(np.zeros((4, 100)), activity_floor=10)
    assert share == StationaryShare(n_tested=0, n_stationary=0, n_skipped=4)
    assert math.isnan(share.fraction)


def test_stationary_fraction_poisson_mostly_stationary():
    rng = np.random.default_rng(7)
    rates = rng.uniform(1.0, 8.0, size=60)
    matrix = rng.poisson(rates[:, None], size=(60, 720))
    share = stationary_fraction(matrix)
    assert share.n_tested == 60
    assert share.fraction >= 0.9


def test_stationary_fraction_flags_drifting_accounts():
    rng = np.random.default_rng(8)
    drift = np.clip(rng.normal(0.0, 1.0, size=(20, 720)).cumsum(axis=1), 0, None)
    share = stationary_fraction(np.rint(drift + 1), activity_floor=10)
    assert share.fraction <= 0.2


def test_lm_shift_invariance():
    rng = np.random.default_rng(9)
    x = rng.normal(size=400)
    base = kpss_test(x, bandwidth=5).lm
    shifted = kpss_test(x + 1000.0, bandwidth=5).lm
    assert shifted == pytest.approx(base, rel=1e-10)


def test_lm_scale_invariance():
    rng = np.random.default_rng(10)
    x = rng.normal(size=400)
    base = kpss_test(x, bandwidth=5).lm
    scaled = kpss_test(-37.5 * x, bandwidth=5).lm
    assert scaled == pytest.approx(base, rel=1e-10)


def test_zero_bandwidth_uses_plain_residual_variance():
    rng = np.random.default_rng(11)
    x = rng.normal(size=200)
    eps = x - x.mean()
    s2 = float(eps @ eps) / x.size
    partial = np.cumsum(eps)
    expected = float(partial @ partial) / (x.size ** 2 * s2)
    assert kpss_test(x, bandwidth=0).lm == pytest.approx(expected, rel=1e-12)


def test_percentage_view():
    share = StationaryShare(n_tested=8, n_stationary=6, n_skipped=1)
    assert share.percentage == pytest.approx(75.0)
