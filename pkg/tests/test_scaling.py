"""Log-binning and the volume-vs-partners exponent fit."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokenlaws.scaling import (
    BinnedScatter,
    InsufficientDataError,
    ScalingFit,
    fit_alpha,
    fit_from_binned,
    log_bin,
)


def test_log_bin_hand_example():
    # edges at log10 N = 0, 1, 2; interior edge values go right; max stays in.
    cut = log_bin([1, 10, 100], [2.0, 20.0, 200.0], n_bins=2)
    assert len(cut) == 2
    assert cut.counts.tolist() == [1, 2]
    assert cut.abscissa[0] == pytest.approx(1.0)
    assert cut.abscissa[1] == pytest.approx(10.0 ** 1.5)
    assert cut.mean_v.tolist() == [2.0, 110.0]
    assert cut.edges.tolist() == pytest.approx([1.0, 10.0, 100.0])


def test_log_bin_drops_empty_bins():
    n = [1, 1, 1000]
    cut = log_bin(n, [1.0, 3.0, 5.0], n_bins=10)
    assert len(cut) == 2
    assert cut.counts.tolist() == [2, 1]
    assert cut.mean_v.tolist() == [2.0, 5.0]


def test_log_bin_single_value_span():
    cut = log_bin([7, 7, 7], [1.0, 2.0, 6.0], n_bins=20)
    assert len(cut) == 1
    assert cut.abscissa[0] == pytest.approx(7.0)
    assert cut.mean_v[0] == pytest.approx(3.0)
    assert cut.counts[0] == 3


@pytest.mark.parametrize("alpha0", [0.67, 1.0, 2.0])
@pytest.mark.parametrize("n_bins", [2, 5, 20])
def test_exact_exponent_recovery(alpha0, n_bins):
    # Two distinct N values always land in separate bins (min in the first,
    # max in the last), so a clean power law refits exactly.
    n = np.array([10] * 5 + [1000] * 7, dtype=float)
    v = n ** alpha0
    fit = fit_alpha(n, v, n_bins=n_bins)
    assert abs(fit.alpha - alpha0) <= 1e-9
    assert fit.r_squared == pytest.approx(1.0)


def test_exact_recovery_many_isolated_values():
    # Each distinct N isolated in its own bin keeps the fit exact too.
    n = np.array([1.0, 10.0, 100.0, 1000.0])
    v = 3.5 * n ** 1.3
    fit = fit_alpha(n, v, n_bins=4)
    assert abs(fit.alpha - 1.3) <= 1e-9
    assert fit.prefactor == pytest.approx(3.5, rel=1e-9)


def test_binning_idempotent_when_bins_are_singletons():
    rng = np.random.default_rng(4)
    n = np.array([2.0, 11.0, 57.0, 312.0, 1999.0])
    v = 2.0 * n ** 0.9 * rng.lognormal(0.0, 0.05, size=n.size)
    binned = fit_alpha(n, v, n_bins=5)
    raw = fit_alpha(n, v, binned=False)
    assert log_bin(n, v, n_bins=5).counts.tolist() == [1] * 5
    assert binned.alpha == pytest.approx(raw.alpha, abs=1e-12)
    assert binned.intercept == pytest.approx(raw.intercept, abs=1e-12)


def test_raw_fit_matches_polyfit():
    rng = np.random.default_rng(9)
    n = rng.integers(1, 500, size=400).astype(float)
    v = n ** 1.2 * rng.lognormal(0.0, 0.3, size=n.size)
    fit = fit_alpha(n, v, binned=False)
    slope, intercept = np.polyfit(np.log10(n), np.log10(v), 1)
    assert fit.alpha == pytest.approx(slope, abs=1e-10)
    assert fit.intercept == pytest.approx(intercept, abs=1e-10)
    assert not fit.binned and fit.n_points == 400


def test_volume_rescaling_shifts_intercept_only():
    rng = np.random.default_rng(12)
    n = rng.integers(1, 2000, size=3000).astype(float)
    v = n ** 0.8 * rng.lognormal(0.0, 0.2, size=n.size)
    base = fit_alpha(n, v)
    scaled = fit_alpha(n, 100.0 * v)
    assert scaled.alpha == pytest.approx(base.alpha, abs=1e-12)
    assert scaled.intercept == pytest.approx(base.intercept + 2.0, abs=1e-12)
    assert scaled.r_squared == pytest.approx(base.r_squared, abs=1e-12)


def test_constant_v_gives_zero_slope_unit_r2():
    fit = fit_alpha([1.0, 10.0, 100.0], [5.0, 5.0, 5.0], n_bins=3)
    assert fit.alpha == pytest.approx(0.0, abs=1e-15)
    assert fit.r_squared == 1.0


def test_noisy_recovery():
    rng = np.random.default_rng(77)
    n = rng.integers(1, 10_000, size=20_000).astype(float)
    v = n ** 0.8 * rng.lognormal(0.0, 0.1, size=n.size)
    binned = fit_alpha(n, v)
    raw = fit_alpha(n, v, binned=False)
    assert abs(binned.alpha - 0.8) < 0.05
    assert abs(binned.alpha - raw.alpha) < 0.02


def test_fit_from_binned_round_trip():
    rng = np.random.default_rng(3)
    n = rng.integers(1, 300, size=500).astype(float)
    v = n ** 1.1 * rng.lognormal(0.0, 0.1, size=n.size)
    cut = log_bin(n, v)
    assert fit_from_binned(cut) == fit_alpha(n, v)


def test_insufficient_and_invalid_inputs():
    with pytest.raises(InsufficientDataError):
        fit_alpha([], [])
    with pytest.raises(InsufficientDataError):
        fit_alpha([5, 5, 5], [1.0, 2.0, 3.0])  # one distinct abscissa
    with pytest.raises(ValueError):
        fit_alpha([1, 2], [1.0])
    with pytest.raises(ValueError):
        fit_alpha([0, 2], [1.0, 1.0])
    with pytest.raises(ValueError):
        fit_alpha([1, 2], [-1.0, 1.0])
    with pytest.raises(ValueError):
        fit_alpha([1, np.nan], [1.0, 1.0])
    with pytest.raises(ValueError):
        log_bin([1, 2], [1.0, 1.0], n_bins=0)


@settings(max_examples=150, deadline=None)
@given(
    n=st.lists(st.integers(min_value=1, max_value=10 ** 6), min_size=1, max_size=60),
    n_bins=st.integers(min_value=1, max_value=30),
)
def test_log_bin_invariants(n, n_bins):
    n_arr = np.array(n, dtype=float)
    v_arr = n_arr * 2.0 + 1.0
    cut = log_bin(n_arr, v_arr, n_bins=n_bins)
    assert cut.counts.sum() == len(n)
    assert np.all(cut.abscissa >= n_arr.min() * (1 - 1e-12))
    assert np.all(cut.abscissa <= n_arr.max() * (1 + 1e-12))
    assert np.all(cut.mean_v >= v_arr.min() - 1e-9)
    assert np.all(cut.mean_v <= v_arr.max() + 1e-9)
    assert np.all(np.diff(cut.abscissa) > 0)
