"""
Statistics on frequency signals.

Population standard deviation, min-max normalisation across groups,
histogram with adjusted Fisher-Pearson skewness, Pearson correlation, a
Pearson-per-lag autocorrelation function and Hann-windowed spectral peaks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import find_peaks

from .gridmetrics import Histogram, binned_counts
from .timeseries import TimeSeries

DEFAULT_HIST_BIN_HZ = 0.001
MIN_SPECTRUM_SAMPLES = 64


class UndefinedCorrelationError(ValueError):
    """One of the inputs has zero variance."""


@dataclass(frozen=True)
class StatReport:
    metric: str
    value: float
    window: tuple[float, float] | None = None
    source: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"{self.metric}: value must be finite, got {self.value}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window) if self.window is not None else None
        return out


@dataclass(frozen=True)
class SpectrumPeak:
    freq_hz: float
    amplitude: float
    prominence: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided amplitude spectrum (DC bin dropped) and its peaks."""

    freqs_hz: np.ndarray
    amplitude: np.ndarray
    resolution_hz: float
    peaks: tuple[SpectrumPeak, ...]


def _values(data) -> np.ndarray:
    if isinstance(data, TimeSeries):
        return data.valid_values
    x = np.asarray(data, dtype=float).reshape(-1)
    return x[np.isfinite(x)]


def std_dev(data) -> float:
    """Population standard deviation over non-gap samples."""
    x = _values(data)
    if x.size < 2:
        raise ValueError(f"need at least 2 valid samples, got {x.size}")
    return float(np.std(x))


class Normalized(NamedTuple):
    values: np.ndarray
    degenerate: bool


def normalize_across_groups(values: Sequence[float]) -> Normalized:
    """Min-max scaling to [0, 1]; constant or single inputs map to zeros."""
    v = np.asarray(values, dtype=float)
    if v.size < 2 or v.max() == v.min():
        return Normalized(np.zeros(v.size), True)
    return Normalized((v - v.min()) / (v.max() - v.min()), False)


def skewness(data) -> float:
    """Adjusted Fisher-Pearson sample skewness ``G1``.

    Zero for constant data; NaN when fewer than three samples.
    """
    x = _values(data)
    n = x.size
    if n < 3:
        return math.nan
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 == 0:
        return 0.0
    m3 = np.mean(d * d * d)
    g1 = m3 / m2**1.5
    return float(g1 * math.sqrt(n * (n - 1)) / (n - 2))


@dataclass(frozen=True, eq=False)
class HistogramResult:
    histogram: Histogram
    skewness: float
    n_samples: int
    std: float


def histogram(data, bin_width: float = DEFAULT_HIST_BIN_HZ) -> HistogramResult:
    """Half-open histogram plus skewness and spread of the same samples."""
    x = _values(data)
    if x.size == 0:
        raise ValueError("histogram of an empty sample")
    hist = binned_counts(x, bin_width)
    return HistogramResult(
        histogram=hist,
        skewness=skewness(x),
        n_samples=int(x.size),
        std=float(np.std(x)),
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson's r computed from mean-centred sums."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least 2 paired observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant input")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class DriverCorrelation:
    r_inertia: float | None
    r_ibr: float
    n_hours: int


def correlate_fluctuation_drivers(
    sigma_f: Sequence[float],
    inertia: Sequence[float] | None,
    penetration: Sequence[float],
) -> DriverCorrelation:
    """Pearson of hourly fluctuation spread against inertia and penetration.

    The three sequences must be hour-aligned. ``inertia`` may be ``None``
    when no inertia data is available.
    """
    s = np.asarray(sigma_f, dtype=float)
    p = np.asarray(penetration, dtype=float)
    if s.shape != p.shape or (inertia is not None and len(inertia) != s.size):
        raise ValueError("hourly sequences are not aligned")
    if s.size < 3:
        raise ValueError(f"need at least 3 aligned hours, got {s.size}")
    r_h = pearson(s, inertia) if inertia is not None else None
    return DriverCorrelation(r_inertia=r_h, r_ibr=pearson(s, p), n_hours=int(s.size))


def hourly_sigma(series: TimeSeries, min_fraction: float = 0.5) -> list[tuple[int, float]]:
    """Spread of the series within each clock hour it covers.

    Returns ``(hour_start_ms, sigma)`` pairs. Hours with fewer than
    ``min_fraction`` of their nominal samples are skipped.
    """
    if len(series) == 0:
        return []
    t = series.timestamps_ms()
    hour_id = np.floor(t / 3_600_000.0).astype(np.int64)
    per_hour = series.rate * 3600.0
    out = []
    bounds = np.flatnonzero(np.diff(hour_id)) + 1
    for a, b in zip(np.r_[0, bounds], np.r_[bounds, hour_id.size]):
        mask = ~series.gap_mask[a:b]
        if mask.sum() < max(2, min_fraction * per_hour):
            continue
        out.append((int(hour_id[a]) * 3_600_000, float(np.std(series.values[a:b][mask]))))
    return out


def acf(data, max_lag: int) -> np.ndarray:
    """Autocorrelation ``r(tau)`` for ``tau = 0..max_lag``.

    Each lag is the Pearson correlation of the series with its shifted copy
    over the overlapping span.
    """
    x = _values(data)
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if x.size <= max_lag + 1:
        raise ValueError(f"series of {x.size} samples too short for max_lag {max_lag}")
    if np.all(x == x[0]):
        raise UndefinedCorrelationError("autocorrelation undefined for a constant series")
    r = np.empty(max_lag + 1)
    r[0] = 1.0
    for lag in range(1, max_lag + 1):
        r[lag] = pearson(x[:-lag], x[lag:])
    return r


def amplitude_spectrum(series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed, mean-removed amplitude spectrum without the DC bin.

    Amplitudes are scaled so a bin-centred sinusoid of amplitude ``A`` reads ``A``.
    """
    if series.has_gaps:
        raise ValueError("spectrum needs a gap-free series")
    x = series.values
    if x.size < MIN_SPECTRUM_SAMPLES:
        raise ValueError(f"need at least {MIN_SPECTRUM_SAMPLES} samples, got {x.size}")
    w = np.hanning(x.size)
    spec = np.fft.rfft((x - x.mean()) * w)
    amp = 2.0 * np.abs(spec) / w.sum()
    freqs = np.fft.rfftfreq(x.size, d=1.0 / series.rate)
    return freqs[1:], amp[1:]


def _find_peaks(freqs, amp, min_prominence, band_hz) -> list[SpectrumPeak]:
    if band_hz is not None:
        sel = np.flatnonzero((freqs >= band_hz[0]) & (freqs <= band_hz[1]))
        if sel.size == 0:
            return []
        lo, hi = sel[0], sel[-1] + 1
    else:
        lo, hi = 0, amp.size
    idx, props = find_peaks(amp[lo:hi], prominence=min_prominence)
    peaks = [
        SpectrumPeak(float(freqs[lo + i]), float(amp[lo + i]), float(p))
        for i, p in zip(idx, props["prominences"])
    ]
    peaks.sort(key=lambda p: (-p.amplitude, p.freq_hz))
    return peaks


def spectrum_peaks(
    series: TimeSeries,
    min_prominence: float,
    band_hz: tuple[float, float] | None = None,
) -> Spectrum:
    """Local maxima of the amplitude spectrum with enough prominence.

    Peaks are sorted by amplitude, largest first. ``band_hz`` restricts the
    search to ``[lo, hi]``; prominences are then measured within the band.
    """
    if min_prominence < 0:
        raise ValueError("min_prominence must be >= 0")
    freqs, amp = amplitude_spectrum(series)
    return Spectrum(
        freqs_hz=freqs,
        amplitude=amp,
        resolution_hz=series.rate / len(series),
        peaks=tuple(_find_peaks(freqs, amp, min_prominence, band_hz)),
    )


def noise_floor(freqs: np.ndarray, amp: np.ndarray, band_hz: tuple[float, float]) -> float:
    """Median amplitude inside the band."""
    sel = (freqs >= band_hz[0]) & (freqs <= band_hz[1])
    if not sel.any():
        raise ValueError(f"band {band_hz} Hz holds no spectral bins")
    return float(np.median(amp[sel]))


def detect_oscillations(
    series: TimeSeries,
    band_hz: tuple[float, float] = (1.0, 5.0),
    prominence_ratio: float = 10.0,
) -> list[SpectrumPeak]:
    """Peaks in ``band_hz`` standing ``prominence_ratio`` times above the band's noise floor."""
    freqs, amp = amplitude_spectrum(series)
    threshold = prominence_ratio * noise_floor(freqs, amp, band_hz)
    return _find_peaks(freqs, amp, threshold, band_hz)
