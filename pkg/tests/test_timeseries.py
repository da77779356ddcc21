from datetime import datetime, timezone
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibrfreq.timeseries import (
    EmptyWindowError,
    SamplingSpec,
    TimeSeries,
    as_rate,
    concatenate,
    decimate,
    fill_gaps,
    gap_runs,
    segments,
    slice_window,
    to_epoch_ms,
    validate,
)


def ts(values, rate=30, start=0):
    return TimeSeries(start_ms=start, sample_rate_hz=rate, values=values)


class TestConstruction:
    def test_nan_becomes_gap(self):
        s = ts([60.0, np.nan, 60.1])
        assert s.gap_mask.tolist() == [False, True, False]
        assert s.has_gaps

    def test_explicit_mask_blanks_values(self):
        s = TimeSeries(0, 30, [1.0, 2.0, 3.0], gap_mask=[False, True, False])
        assert np.isnan(s.values[1])

    def test_arrays_are_read_only(self):
        s = ts([1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0] = 5.0

    def test_input_array_is_copied(self):
        raw = np.array([1.0, 2.0])
        s = ts(raw)
        raw[0] = 9.0
        assert s.values[0] == 1.0

    def test_rate_must_be_positive(self):
        with pytest.raises(ValueError):
            ts([1.0], rate=0)

    def test_infinite_value_without_mask_is_gap(self):
        assert ts([np.inf, 1.0]).gap_mask[0]

    def test_infinite_unmasked_value_rejected(self):
        with pytest.raises(ValueError):
            TimeSeries(0, 30, [np.inf, 1.0], gap_mask=[False, False])

    def test_mask_length_mismatch(self):
        with pytest.raises(ValueError):
            TimeSeries(0, 30, [1.0, 2.0], gap_mask=[False])

    def test_equality_ignores_name_and_meta(self):
        a = TimeSeries(0, 30, [1.0, np.nan], name="a")
        b = TimeSeries(0, Fraction(30), [1.0, np.nan], name="b", meta={"x": 1})
        assert a == b
        assert a != ts([1.0, 2.0])

    def test_times_are_exact_for_30hz(self):
        s = ts(np.zeros(31), rate=30, start=1_000)
        assert s.time_ms(3) == 1_100
        assert s.time_ms(30) == 2_000
        assert s.end_ms == Fraction(1_000) + Fraction(31_000, 30)

    def test_as_rate_from_float(self):
        assert as_rate(29.97) == Fraction(2997, 100)

    def test_naive_datetime_is_utc(self):
        naive = datetime(2023, 7, 17, 9)
        aware = datetime(2023, 7, 17, 9, tzinfo=timezone.utc)
        assert to_epoch_ms(naive) == to_epoch_ms(aware) == 1_689_584_400_000


class TestGaps:
    def test_gap_runs_half_open(self):
        assert gap_runs(np.array([0, 1, 1, 0, 1], bool)) == [(1, 3), (4, 5)]
        assert gap_runs(np.zeros(0, bool)) == []

    def test_fill_interior_linear(self):
        s = fill_gaps(ts([0.0, np.nan, np.nan, 3.0]))
        assert s.values.tolist() == [0.0, 1.0, 2.0, 3.0]
        assert not s.has_gaps
        assert s.meta["filled_runs"] == [(1, 3)]

    def test_edge_and_long_runs_stay_masked(self):
        x = [np.nan, 1.0, np.nan, np.nan, np.nan, 5.0, np.nan]
        s = fill_gaps(ts(x), max_gap_samples=2)
        assert s.gap_mask.tolist() == [True, False, True, True, True, False, True]
        assert s.meta["unfilled_runs"] == [(0, 1, "edge"), (2, 5, "too_long"), (6, 7, "edge")]

    def test_default_fills_thirty_samples(self):
        x = np.ones(40)
        x[5:35] = np.nan
        assert not fill_gaps(ts(x)).has_gaps
        x[5:36] = np.nan
        assert fill_gaps(ts(x)).has_gaps

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.one_of(st.floats(-10, 10), st.just(float("nan"))), min_size=1, max_size=60))
    def test_fill_never_changes_valid_samples(self, values):
        s = ts(values)
        filled = fill_gaps(s)
        valid = ~s.gap_mask
        assert np.array_equal(filled.values[valid], s.values[valid])
        assert np.all(filled.gap_mask <= s.gap_mask)

    def test_segments(self):
        parts = segments(ts([1.0, 2.0, np.nan, 4.0], rate=10, start=0))
        assert [len(p) for p in parts] == [2, 1]
        assert parts[1].start_ms == 300

    def test_validate_counts_out_of_band(self):
        rep = validate(ts([60.0, 54.0, np.nan, np.nan, 66.0]))
        assert (rep.n_gaps, rep.longest_gap_run, rep.n_out_of_band) == (2, 2, 2)
        assert not rep.plausible
        assert validate(ts([1.0]), band=None).plausible


class TestWindows:
    def test_half_open_window(self):
        s = ts(np.arange(10.0), rate=1, start=0)
        w = slice_window(s, 2_000, 5_000)
        assert w.values.tolist() == [2.0, 3.0, 4.0]
        assert w.start_ms == 2_000

    def test_window_between_samples(self):
        s = ts(np.arange(10.0), rate=1, start=0)
        assert slice_window(s, 1_500, 3_000).values.tolist() == [2.0]

    def test_windows_partition_the_series(self):
        s = ts(np.arange(90.0), rate=30, start=0)
        parts = [slice_window(s, a, a + 1_000) for a in (0, 1_000, 2_000)]
        assert np.array_equal(concatenate(parts), s.values)

    def test_datetime_bounds(self):
        start = datetime(2023, 7, 17, 9)
        s = TimeSeries(start, 30, np.zeros(30 * 3600 * 3))
        w = slice_window(s, datetime(2023, 7, 17, 10), datetime(2023, 7, 17, 11))
        assert len(w) == 108_000

    def test_empty_window(self):
        with pytest.raises(EmptyWindowError):
            slice_window(ts(np.zeros(10), rate=1), 20_000, 30_000)

    def test_reversed_window(self):
        with pytest.raises(ValueError):
            slice_window(ts(np.zeros(10), rate=1), 5_000, 1_000)


class TestDecimate:
    def test_rate_and_length(self):
        s = ts(np.zeros(300), rate=30)
        d = decimate(s, SamplingSpec(1))
        assert d.sample_rate_hz == 1 and len(d) == 10

    def test_non_integer_factor_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            decimate(ts(np.zeros(300), rate=30), SamplingSpec(7))

    def test_gaps_rejected(self):
        with pytest.raises(ValueError):
            decimate(ts([1.0, np.nan, 1.0, 1.0]), SamplingSpec(15))

    def test_slow_content_passes_fast_content_removed(self):
        rate = 30
        t = np.arange(30 * 600) / rate
        slow = 0.05 * np.sin(2 * np.pi * 0.01 * t)
        fast = 0.02 * np.sin(2 * np.pi * 5.0 * t)
        d = decimate(ts(60 + slow + fast, rate=rate), SamplingSpec(1))
        core = slice(20, -20)
        assert np.max(np.abs(d.values - 60 - slow[::30])[core]) < 1e-3

    def test_without_antialias_is_plain_stride(self):
        x = np.arange(60.0)
        d = decimate(ts(x), SamplingSpec(10, antialias=False))
        assert d.values.tolist() == x[::3].tolist()
