"""
Uniformly sampled signals with gap masks.

A :class:`TimeSeries` is the currency passed between every analysis step:
PMU frequency streams (Hz), hourly power series (MW) and the components
produced by the decomposition. Sample ``i`` sits exactly at
``start_ms + i * 1000 / sample_rate_hz``; there is no irregular sampling.

All operations are pure and return new series. Value and mask arrays are
marked read-only on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, Mapping, Sequence, Union

import numpy as np
from scipy import signal

Number = Union[int, float, Fraction]
TimeLike = Union[int, float, Fraction, datetime]

DEFAULT_MAX_GAP_SAMPLES = 30
FREQUENCY_BAND_HZ = (55.0, 65.0)


class EmptyWindowError(ValueError):
    """Raised when a requested time window does not overlap the series."""


def as_rate(rate: Number | str) -> Fraction:
    """Convert a sample rate to an exact positive rational."""
    if isinstance(rate, Fraction):
        value = rate
    elif isinstance(rate, int):
        value = Fraction(rate)
    else:
        value = Fraction(str(rate)).limit_denominator(10**6)
    if value <= 0:
        raise ValueError(f"sample rate must be positive, got {rate}")
    return value


def to_epoch_ms(t: TimeLike) -> Fraction:
    """Epoch milliseconds (exact) from a datetime or a numeric ms value.

    Naive datetimes are read as UTC.
    """
    if isinstance(t, datetime):
        if t.tzinfo is None:
            t = t.replace(tzinfo=timezone.utc)
        delta = t - datetime(1970, 1, 1, tzinfo=timezone.utc)
        us = (delta.days * 86400 + delta.seconds) * 1_000_000 + delta.microseconds
        return Fraction(us, 1000)
    if isinstance(t, float):
        return Fraction(str(t))
    return Fraction(t)


def _compact(ms: Fraction) -> int | Fraction:
    return int(ms) if ms.denominator == 1 else ms


def gap_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` index runs where ``mask`` is true."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        return []
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled scalar signal.

    Parameters
    ----------
    start_ms : int or Fraction
        UTC epoch milliseconds of sample 0.
    sample_rate_hz : Fraction
        Positive sample rate; floats and ints are converted exactly.
    values : numpy.ndarray
        Samples. Masked positions are stored as NaN.
    gap_mask : numpy.ndarray, optional
        True where the sample is missing. Defaults to the non-finite values.
    name : str
        Free-form identifier carried into reports.
    meta : mapping
        Operation metadata (e.g. unfilled gap runs). Not part of equality.
    """

    start_ms: int | Fraction
    sample_rate_hz: Fraction
    values: np.ndarray
    gap_mask: np.ndarray | None = None
    name: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        rate = as_rate(self.sample_rate_hz)
        values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if self.gap_mask is None:
            mask = ~np.isfinite(values)
        else:
            mask = np.array(self.gap_mask, dtype=bool, copy=True).reshape(-1)
            if mask.shape != values.shape:
                raise ValueError(
                    f"gap_mask length {mask.size} != values length {values.size}"
                )
        if not np.all(np.isfinite(values[~mask])):
            raise ValueError("non-gap samples must be finite")
        values[mask] = np.nan
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "sample_rate_hz", rate)
        object.__setattr__(self, "start_ms", _compact(to_epoch_ms(self.start_ms)))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gap_mask", mask)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            Fraction(self.start_ms) == Fraction(other.start_ms)
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.gap_mask, other.gap_mask)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def rate(self) -> float:
        return float(self.sample_rate_hz)

    @property
    def step_ms(self) -> Fraction:
        return Fraction(1000) / self.sample_rate_hz

    @property
    def end_ms(self) -> Fraction:
        """Exclusive end: timestamp one step after the last sample."""
        return Fraction(self.start_ms) + len(self) * self.step_ms

    @property
    def duration_s(self) -> float:
        return len(self) / self.rate

    @property
    def has_gaps(self) -> bool:
        return bool(self.gap_mask.any())

    @property
    def valid_values(self) -> np.ndarray:
        return self.values[~self.gap_mask]

    def time_ms(self, i: int) -> Fraction:
        return Fraction(self.start_ms) + i * self.step_ms

    def timestamps_ms(self) -> np.ndarray:
        return float(self.start_ms) + np.arange(len(self)) * float(self.step_ms)

    def replace(self, values: np.ndarray | None = None, **changes: Any) -> TimeSeries:
        """New series sharing this one's time base unless overridden."""
        kwargs: dict[str, Any] = dict(
            start_ms=self.start_ms,
            sample_rate_hz=self.sample_rate_hz,
            values=self.values if values is None else values,
            gap_mask=self.gap_mask if values is None else None,
            name=self.name,
        )
        kwargs.update(changes)
        return TimeSeries(**kwargs)


@dataclass(frozen=True)
class SamplingSpec:
    """Target rate for :func:`decimate`.

    ``target_rate_hz`` must divide the input rate to an integer factor.
    """

    target_rate_hz: Fraction
    antialias: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "target_rate_hz", as_rate(self.target_rate_hz))

    def factor_for(self, rate: Fraction) -> int:
        ratio = as_rate(rate) / self.target_rate_hz
        if ratio.denominator != 1 or ratio < 1:
            raise ValueError(
                f"target rate {self.target_rate_hz} Hz does not divide input rate "
                f"{rate} Hz into an integer decimation factor (ratio {ratio})"
            )
        return int(ratio)


@dataclass(frozen=True)
class ValidationReport:
    n_samples: int
    n_gaps: int
    longest_gap_run: int
    min_value: float
    max_value: float
    band: tuple[float, float] | None
    n_out_of_band: int

    @property
    def plausible(self) -> bool:
        return self.n_out_of_band == 0


def validate(
    series: TimeSeries, band: tuple[float, float] | None = FREQUENCY_BAND_HZ
) -> ValidationReport:
    """Summarise gaps, range and plausibility. Never raises on bad data.

    ``band`` is the inclusive plausibility range; pass ``None`` for
    non-frequency channels.
    """
    valid = series.valid_values
    runs = gap_runs(series.gap_mask)
    lo = float(valid.min()) if valid.size else math.nan
    hi = float(valid.max()) if valid.size else math.nan
    n_out = 0
    if band is not None and valid.size:
        n_out = int(np.count_nonzero((valid < band[0]) | (valid > band[1])))
    return ValidationReport(
        n_samples=len(series),
        n_gaps=int(series.gap_mask.sum()),
        longest_gap_run=max((b - a for a, b in runs), default=0),
        min_value=lo,
        max_value=hi,
        band=band,
        n_out_of_band=n_out,
    )


def fill_gaps(
    series: TimeSeries, max_gap_samples: int = DEFAULT_MAX_GAP_SAMPLES
) -> TimeSeries:
    """Linearly interpolate interior gap runs no longer than ``max_gap_samples``.

    Longer runs and runs touching either end stay masked; they are listed in
    ``meta["unfilled_runs"]`` as ``(start, stop, reason)``. Non-gap samples
    are copied untouched.
    """
    if max_gap_samples < 0:
        raise ValueError("max_gap_samples must be >= 0")
    values = series.values.copy()
    mask = series.gap_mask.copy()
    n = len(series)
    filled: list[tuple[int, int]] = []
    unfilled: list[tuple[int, int, str]] = []
    for a, b in gap_runs(mask):
        if a == 0 or b == n:
            unfilled.append((a, b, "edge"))
            continue
        if b - a > max_gap_samples:
            unfilled.append((a, b, "too_long"))
            continue
        left, right = values[a - 1], values[b]
        span = b - a + 1
        frac = np.arange(1, span) / span
        values[a:b] = left + (right - left) * frac
        mask[a:b] = False
        filled.append((a, b))
    return TimeSeries(
        start_ms=series.start_ms,
        sample_rate_hz=series.sample_rate_hz,
        values=values,
        gap_mask=mask,
        name=series.name,
        meta={"filled_runs": filled, "unfilled_runs": unfilled},
    )


def segments(series: TimeSeries, min_samples: int = 1) -> list[TimeSeries]:
    """Split at masked samples into gap-free contiguous pieces."""
    out = []
    for a, b in gap_runs(~series.gap_mask):
        if b - a >= min_samples:
            out.append(
                TimeSeries(
                    start_ms=series.time_ms(a),
                    sample_rate_hz=series.sample_rate_hz,
                    values=series.values[a:b],
                    name=series.name,
                )
            )
    return out


def lowpass_zero_phase(x: np.ndarray, rate_hz: float, cutoff_hz: float, order: int = 8) -> np.ndarray:
    sos = signal.butter(order, cutoff_hz, btype="low", fs=rate_hz, output="sos")
    padlen = min(3 * (2 * len(sos) + 1), x.size - 1)
    return signal.sosfiltfilt(sos, x, padlen=padlen)


def decimate(series: TimeSeries, spec: SamplingSpec) -> TimeSeries:
    """Integer-factor rate reduction.

    With ``spec.antialias`` a zero-phase Butterworth low-pass at 80 % of the
    target Nyquist frequency runs before every k-th sample is kept.
    """
    k = spec.factor_for(series.sample_rate_hz)
    if series.has_gaps:
        raise ValueError("series has masked gaps; call fill_gaps first")
    x = series.values
    if k == 1:
        return series.replace(values=x)
    if spec.antialias and x.size > 1:
        cutoff = 0.8 * float(spec.target_rate_hz) / 2.0
        x = lowpass_zero_phase(x, series.rate, cutoff)
    return TimeSeries(
        start_ms=series.start_ms,
        sample_rate_hz=spec.target_rate_hz,
        values=x[::k],
        name=series.name,
    )


def window_indices(series: TimeSeries, start: TimeLike, end: TimeLike) -> tuple[int, int]:
    """Index range of samples whose timestamps fall in ``[start, end)``."""
    t0 = Fraction(series.start_ms)
    lo, hi = to_epoch_ms(start), to_epoch_ms(end)
    if lo >= hi:
        raise ValueError(f"window start {lo} ms is not before end {hi} ms")
    per_ms = series.sample_rate_hz / 1000
    n = len(series)
    i0 = min(max(math.ceil((lo - t0) * per_ms), 0), n)
    i1 = min(max(math.ceil((hi - t0) * per_ms), 0), n)
    return i0, i1


def slice_window(series: TimeSeries, start: TimeLike, end: TimeLike) -> TimeSeries:
    """Samples with timestamp in the half-open interval ``[start, end)``."""
    i0, i1 = window_indices(series, start, end)
    if i1 <= i0:
        raise EmptyWindowError(
            f"window [{to_epoch_ms(start)}, {to_epoch_ms(end)}) ms does not overlap "
            f"series [{series.start_ms}, {series.end_ms}) ms"
        )
    return TimeSeries(
        start_ms=series.time_ms(i0),
        sample_rate_hz=series.sample_rate_hz,
        values=series.values[i0:i1],
        gap_mask=series.gap_mask[i0:i1],
        name=series.name,
    )


def concatenate(pieces: Sequence[TimeSeries]) -> np.ndarray:
    """Valid samples of several series joined end to end (for pooled stats)."""
    if not pieces:
        return np.empty(0)
    return np.concatenate([p.valid_values for p in pieces])
