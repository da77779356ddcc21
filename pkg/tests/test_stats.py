import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from ibrfreq import stats
from ibrfreq.timeseries import TimeSeries

import oracles

finite = st.floats(-1e3, 1e3, allow_nan=False)


def ts(x, rate=30):
    return TimeSeries(start_ms=0, sample_rate_hz=rate, values=x)


class TestStdDev:
    def test_two_point(self):
        assert stats.std_dev([59.9, 60.1]) == pytest.approx(0.1, abs=1e-12)

    def test_constant(self):
        assert stats.std_dev(ts(np.full(10, 60.0))) == 0.0

    def test_gaps_ignored(self):
        assert stats.std_dev(ts([59.9, np.nan, 60.1])) == pytest.approx(0.1, abs=1e-12)

    def test_unit_noise(self):
        x = np.random.default_rng(0).standard_normal(1000)
        assert stats.std_dev(x) == pytest.approx(1.0, abs=0.1)

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            stats.std_dev([1.0, np.nan])


class TestNormalize:
    def test_min_max(self):
        out = stats.normalize_across_groups([0.02, 0.04, 0.06])
        assert np.allclose(out.values, [0.0, 0.5, 1.0]) and not out.degenerate

    def test_single_value_degenerate(self):
        assert stats.normalize_across_groups([5.0]).degenerate

    def test_constant_degenerate(self):
        out = stats.normalize_across_groups([3.0, 3.0])
        assert out.degenerate and out.values.tolist() == [0.0, 0.0]

    @settings(max_examples=50)
    @given(st.lists(finite, min_size=2, max_size=20), st.floats(0.1, 100), st.floats(-100, 100))
    def test_affine_invariant(self, v, a, b):
        assume(max(v) - min(v) > 1e-3)
        x = stats.normalize_across_groups(v).values
        y = stats.normalize_across_groups([a * e + b for e in v]).values
        assert np.allclose(x, y, atol=1e-9)


class TestSkewness:
    def test_symmetric(self):
        assert stats.skewness([-1.0, 0.0, 1.0]) == 0.0

    def test_right_tail_positive(self):
        assert stats.skewness([0.0, 0.0, 0.0, 10.0]) > 0

    def test_constant_is_zero(self):
        assert stats.skewness([2.0, 2.0, 2.0]) == 0.0

    def test_short_is_nan(self):
        assert math.isnan(stats.skewness([1.0, 2.0]))

    def test_matches_scipy_adjusted(self):
        x = np.random.default_rng(1).gamma(2.0, size=500)
        assert stats.skewness(x) == pytest.approx(sps.skew(x, bias=False), rel=1e-10)

    def test_skew_normal_generator(self):
        shape = 4.0
        delta = shape / math.sqrt(1 + shape**2)
        mu = delta * math.sqrt(2 / math.pi)
        analytic = (4 - math.pi) / 2 * mu**3 / (1 - mu**2) ** 1.5
        x = sps.skewnorm.rvs(shape, size=100_000, random_state=np.random.default_rng(7))
        assert stats.skewness(x) == pytest.approx(analytic, abs=0.05)

    @settings(max_examples=50)
    @given(st.lists(st.floats(0, 100), min_size=2, max_size=30), st.floats(-50, 50))
    def test_symmetric_sample(self, half, centre):
        x = np.array([centre - h for h in half] + [centre + h for h in half])
        assume(np.ptp(x) > 1e-6)
        assert abs(stats.skewness(x)) < 1e-6


class TestHistogram:
    def test_total_and_skew(self):
        x = np.random.default_rng(2).normal(0, 0.002, 5000)
        h = stats.histogram(ts(x))
        assert h.histogram.total == h.n_samples == 5000
        assert h.histogram.bin_width == 0.001
        assert h.skewness == pytest.approx(stats.skewness(x))

    def test_empty(self):
        with pytest.raises(ValueError):
            stats.histogram([np.nan])

    def test_bad_width(self):
        with pytest.raises(ValueError):
            stats.histogram([1.0, 2.0], 0.0)


class TestPearson:
    def test_hand_case(self):
        assert stats.pearson([1, 2, 3], [6, 4, 5]) == pytest.approx(-0.5, abs=1e-15)

    def test_perfect(self):
        x = np.arange(10.0)
        assert stats.pearson(x, 2 * x) == 1.0
        assert stats.pearson(x, -x + 3) == -1.0

    def test_constant_undefined(self):
        with pytest.raises(stats.UndefinedCorrelationError):
            stats.pearson([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            stats.pearson([1, 2], [1, 2, 3])

    @settings(max_examples=100)
    @given(st.lists(st.tuples(finite, finite), min_size=3, max_size=40))
    def test_symmetric_and_bounded(self, pairs):
        x, y = zip(*pairs)
        assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
        r = stats.pearson(x, y)
        assert -1 <= r <= 1
        assert r == pytest.approx(stats.pearson(y, x), abs=1e-12)

    @settings(max_examples=100)
    @given(
        st.lists(st.tuples(finite, finite), min_size=3, max_size=40),
        st.floats(0.1, 10) | st.floats(-10, -0.1),
        st.floats(-100, 100),
        st.floats(0.1, 10) | st.floats(-10, -0.1),
        st.floats(-100, 100),
    )
    def test_affine(self, pairs, a, b, c, d):
        x, y = map(np.array, zip(*pairs))
        assume(np.ptp(x) > 1e-2 and np.ptp(y) > 1e-2)
        r = stats.pearson(x, y)
        assume(abs(r) < 1 - 1e-6)
        r2 = stats.pearson(a * x + b, c * y + d)
        assert r2 == pytest.approx(np.sign(a * c) * r, abs=1e-9)


class TestDrivers:
    def test_affine_sigma(self):
        pen = np.linspace(80, 160, 48)
        res = stats.correlate_fluctuation_drivers(0.001 + 1e-5 * pen, 5e4 - 10 * pen, pen)
        assert res.r_ibr == pytest.approx(1.0) and res.r_inertia == pytest.approx(-1.0)
        assert res.n_hours == 48

    def test_independent_sequences(self):
        rng = np.random.default_rng(11)
        res = stats.correlate_fluctuation_drivers(rng.random(1000), rng.random(1000), rng.random(1000))
        assert abs(res.r_ibr) < 0.1 and abs(res.r_inertia) < 0.1

    def test_sign_pattern(self):
        rng = np.random.default_rng(12)
        pen = rng.uniform(80, 160, 168)
        inertia = 3e4 - 50 * pen + rng.normal(0, 500, 168)
        sigma = 0.002 * pen / 120 + rng.normal(0, 2e-4, 168)
        res = stats.correlate_fluctuation_drivers(sigma, inertia, pen)
        assert res.r_inertia < 0 < res.r_ibr

    def test_without_inertia(self):
        res = stats.correlate_fluctuation_drivers([1, 2, 3], None, [2, 4, 7])
        assert res.r_inertia is None

    def test_too_few_hours(self):
        with pytest.raises(ValueError):
            stats.correlate_fluctuation_drivers([1, 2], [1, 2], [1, 2])

    def test_misaligned(self):
        with pytest.raises(ValueError):
            stats.correlate_fluctuation_drivers([1, 2, 3], [1, 2], [1, 2, 3])


class TestHourlySigma:
    def test_per_clock_hour(self):
        rate = 1
        x = np.r_[np.tile([1.0, -1.0], 1800), np.tile([2.0, -2.0], 1800)]
        s = TimeSeries(start_ms=3_600_000 * 5, sample_rate_hz=rate, values=x)
        out = stats.hourly_sigma(s)
        assert out == [(3_600_000 * 5, 1.0), (3_600_000 * 6, 2.0)]

    def test_sparse_hour_skipped(self):
        x = np.ones(3600)
        x[100:] = np.nan
        assert stats.hourly_sigma(TimeSeries(0, 1, x)) == []


class TestAcf:
    def test_lag_zero_is_one(self):
        r = stats.acf(np.random.default_rng(0).random(50), 5)
        assert r[0] == 1.0 and r.size == 6

    def test_sinusoid_period(self):
        period = 40
        x = np.sin(2 * np.pi * np.arange(2000) / period)
        assert stats.acf(x, period)[period] >= 0.99

    def test_white_noise(self):
        r = stats.acf(np.random.default_rng(3).standard_normal(10_000), 30)
        assert np.all(np.abs(r[1:]) < 0.05)

    def test_constant(self):
        with pytest.raises(stats.UndefinedCorrelationError):
            stats.acf(np.ones(20), 3)

    def test_too_short(self):
        with pytest.raises(ValueError):
            stats.acf([1.0, 2.0, 3.0], 2)


class TestOracleEquivalence:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_against_direct_sums(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(6, 33))
        x = rng.normal(0, rng.uniform(0.1, 10), n).tolist()
        y = rng.normal(0, 1, n).tolist()
        lag = int(rng.integers(1, n - 3))
        assert abs(stats.pearson(x, y) - oracles.pearson(x, y)) < 1e-10
        assert abs(stats.std_dev(x) - oracles.pstd(x)) < 1e-10
        assert abs(stats.skewness(x) - oracles.skewness(x)) < 1e-10
        assert np.max(np.abs(stats.acf(x, lag) - oracles.acf(x, lag))) < 1e-10


class TestSpectrum:
    def test_injected_tone(self):
        rate, n = 30, 30 * 60
        t = np.arange(n) / rate
        x = 60 + 0.01 * np.sin(2 * np.pi * 2.5 * t) + np.random.default_rng(4).normal(0, 0.001, n)
        sp = stats.spectrum_peaks(ts(x), min_prominence=0.001)
        assert abs(sp.peaks[0].freq_hz - 2.5) <= sp.resolution_hz
        assert sp.resolution_hz == pytest.approx(rate / n)
        assert sp.peaks[0].amplitude == pytest.approx(0.01, rel=0.05)

    def test_pure_dc_has_no_peaks(self):
        assert stats.spectrum_peaks(ts(np.full(128, 60.0)), 0.0).peaks == ()

    def test_two_tones_equal_amplitude(self):
        rate, n = 30, 30 * 100
        t = np.arange(n) / rate
        x = 0.01 * np.sin(2 * np.pi * 0.3 * t) + 0.01 * np.sin(2 * np.pi * 2.5 * t)
        peaks = stats.spectrum_peaks(ts(x), 0.002).peaks
        assert [round(p.freq_hz, 2) for p in sorted(peaks[:2], key=lambda p: p.freq_hz)] == [0.3, 2.5]
        assert peaks[0].amplitude == pytest.approx(peaks[1].amplitude, rel=0.1)

    def test_sorted_by_amplitude(self):
        t = np.arange(3000) / 30
        x = 0.01 * np.sin(2 * np.pi * 1 * t) + 0.03 * np.sin(2 * np.pi * 4 * t) + 0.02 * np.sin(2 * np.pi * 7 * t)
        amps = [p.amplitude for p in stats.spectrum_peaks(ts(x), 0.005).peaks]
        assert amps == sorted(amps, reverse=True) and len(amps) == 3

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 1000), st.floats(-100, 100))
    def test_dc_offset_invariant(self, seed, c):
        x = np.random.default_rng(seed).normal(0, 1, 256)
        a = stats.spectrum_peaks(ts(x), 0.05)
        b = stats.spectrum_peaks(ts(x + c), 0.05)
        assert np.allclose(a.amplitude, b.amplitude, atol=1e-9)
        assert [p.freq_hz for p in a.peaks] == [p.freq_hz for p in b.peaks]

    def test_frequencies_within_nyquist(self):
        sp = stats.spectrum_peaks(ts(np.random.default_rng(0).random(301)), 0.0)
        assert all(0 <= p.freq_hz <= 15 for p in sp.peaks)

    def test_short_input(self):
        with pytest.raises(ValueError):
            stats.spectrum_peaks(ts(np.ones(63)), 0.0)

    def test_gaps_rejected(self):
        with pytest.raises(ValueError):
            stats.spectrum_peaks(ts(np.r_[np.ones(100), np.nan]), 0.0)

    def test_detect_oscillations(self):
        rate, n = 30, 30 * 600
        rng = np.random.default_rng(5)
        noise = rng.normal(0, 0.002, n)
        t = np.arange(n) / rate
        assert stats.detect_oscillations(ts(noise)) == []
        hits = stats.detect_oscillations(ts(noise + 0.003 * np.sin(2 * np.pi * 2.5 * t)))
        assert hits and abs(hits[0].freq_hz - 2.5) < 0.01

    def test_stat_report(self):
        rep = stats.StatReport("std_dev_hz", 0.002, (0.0, 1.0), "NE")
        assert rep.to_dict() == {"metric": "std_dev_hz", "value": 0.002, "window": [0.0, 1.0], "source": "NE"}
        with pytest.raises(ValueError):
            stats.StatReport("x", float("nan"))
