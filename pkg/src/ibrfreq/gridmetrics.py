"""
Hourly grid data and power-balance metrics.

Covers the centre-of-inertia frequency, regional IBR penetration, net load
and its ramps over several horizons, and wind-curtailment aggregation.
Inertia is carried in MW·s (rating-scaled), which is what makes the plain
inertia-weighted average a meaningful system frequency.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

RAMP_HORIZONS_H = (1, 3, 5, 7, 12)
POWER_FIELDS = ("hydro_mw", "thermal_mw", "wind_mw", "solar_mw", "der_mw", "demand_mw")


class Region(Enum):
    N = "N"
    NE = "NE"
    S = "S"
    SE_CW = "SE_CW"

    @classmethod
    def parse(cls, text: str) -> Region:
        key = text.strip().upper().replace("-", "_").replace("&", "_").replace(" ", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown region {text!r}; expected one of {[r.value for r in cls]}"
            ) from None


REGION_ORDER = tuple(Region)


class CurtailReason(Enum):
    ENERGY_BALANCE = "energy_balance"
    RELIABILITY = "reliability"
    EXTERNAL_UNAVAILABILITY = "external_electrical"

    @property
    def label(self) -> str:
        return {
            CurtailReason.ENERGY_BALANCE: "Energy balance",
            CurtailReason.RELIABILITY: "Reliability requirements",
            CurtailReason.EXTERNAL_UNAVAILABILITY: "External unavailability (electrical)",
        }[self]


class UndefinedPenetrationError(ValueError):
    """Demand is zero, so penetration has no meaning for that hour."""


def _check_power(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class RegionalHourRecord:
    """One region, one hour of average generation and demand (MW)."""

    region: Region
    date: date
    hour: int
    hydro_mw: float = 0.0
    thermal_mw: float = 0.0
    wind_mw: float = 0.0
    solar_mw: float = 0.0
    der_mw: float = 0.0
    demand_mw: float = 0.0
    inertia_mws: float | None = None
    curtailed_wind_mw: float | None = None
    curtail_reason: CurtailReason | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.hour <= 23:
            raise ValueError(f"hour must be in [0, 23], got {self.hour}")
        for name in POWER_FIELDS:
            _check_power(name, getattr(self, name))
        for name in ("inertia_mws", "curtailed_wind_mw"):
            value = getattr(self, name)
            if value is not None:
                _check_power(name, value)

    @property
    def ibr_mw(self) -> float:
        return self.wind_mw + self.solar_mw + self.der_mw

    @property
    def start(self) -> datetime:
        return datetime(self.date.year, self.date.month, self.date.day, self.hour)


@dataclass(frozen=True)
class CurtailmentRecord:
    """A single curtailment order; several may fall in the same region-hour."""

    region: Region
    date: date
    hour: int
    curtailed_wind_mw: float
    curtail_reason: CurtailReason

    def __post_init__(self) -> None:
        if not 0 <= self.hour <= 23:
            raise ValueError(f"hour must be in [0, 23], got {self.hour}")
        _check_power("curtailed_wind_mw", self.curtailed_wind_mw)


@dataclass(frozen=True)
class SystemHour:
    """Sum of the four regional records for one hour."""

    date: date
    hour: int
    hydro_mw: float
    thermal_mw: float
    wind_mw: float
    solar_mw: float
    der_mw: float
    demand_mw: float
    inertia_mws: float | None = None

    @property
    def start(self) -> datetime:
        return datetime(self.date.year, self.date.month, self.date.day, self.hour)


@dataclass(frozen=True)
class MachineState:
    inertia_mws: float
    freq_hz: float

    def __post_init__(self) -> None:
        if not self.inertia_mws > 0:
            raise ValueError(f"inertia must be > 0 MW·s, got {self.inertia_mws}")


def coi_frequency(machines: Iterable[MachineState]) -> float:
    """Inertia-weighted mean of machine frequencies."""
    machines = list(machines)
    if not machines:
        raise ValueError("need at least one machine")
    h = np.array([m.inertia_mws for m in machines], dtype=float)
    w = np.array([m.freq_hz for m in machines], dtype=float)
    total = h.sum()
    if not total > 0:
        raise ValueError("total inertia must be positive")
    value = float(np.dot(h, w) / total)
    # Keep the result inside the convex hull despite round-off.
    return min(max(value, float(w.min())), float(w.max()))


def ibr_penetration(record) -> float:
    """Wind + solar + DER as a percentage of demand."""
    if record.demand_mw == 0:
        raise UndefinedPenetrationError(
            f"demand is zero for {getattr(record, 'region', 'system')} "
            f"{record.date} hour {record.hour}"
        )
    return (record.wind_mw + record.solar_mw + record.der_mw) / record.demand_mw * 100.0


def net_load(record) -> float:
    """Demand minus wind, solar and DER. Negative values mean surplus."""
    return record.demand_mw - record.wind_mw - record.solar_mw - record.der_mw


def net_load_ramps(nl: Sequence[float], horizon_h: int) -> np.ndarray:
    """``R_i = NL[i + h] - NL[i]`` for every start index with a full window."""
    nl = np.asarray(nl, dtype=float)
    if horizon_h < 1:
        raise ValueError(f"horizon must be >= 1 hour, got {horizon_h}")
    if horizon_h >= nl.size:
        raise ValueError(f"horizon {horizon_h} h needs more than {nl.size} hourly values")
    return nl[horizon_h:] - nl[:-horizon_h]


@dataclass(frozen=True, eq=False)
class Histogram:
    """Counts over half-open bins ``[edges[i], edges[i+1])``."""

    bin_width: float
    edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_mapping(self) -> dict[tuple[float, float], int]:
        return {
            (float(a), float(b)): int(c)
            for a, b, c in zip(self.edges[:-1], self.edges[1:], self.counts)
        }


def binned_counts(values: Sequence[float], bin_width: float) -> Histogram:
    """Histogram on the grid ``k * bin_width`` spanning exactly the data range."""
    if not bin_width > 0:
        raise ValueError(f"bin width must be > 0, got {bin_width}")
    x = np.asarray(values, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ValueError("no values to bin")
    k = np.floor(x / bin_width)
    # Division round-off can put a value one bin off its true position.
    k = np.where((k + 1) * bin_width <= x, k + 1, k)
    k = np.where(k * bin_width > x, k - 1, k).astype(np.int64)
    k0 = int(k.min())
    counts = np.bincount(k - k0)
    edges = (np.arange(counts.size + 1) + k0) * bin_width
    return Histogram(bin_width=float(bin_width), edges=edges, counts=counts)


def ramp_histogram(ramps: Sequence[float], bin_width_mw: float) -> Histogram:
    return binned_counts(ramps, bin_width_mw)


@dataclass(frozen=True)
class CurtailmentBreakdown:
    hour_range: tuple[int, int]
    counts: Mapping[CurtailReason, int]
    percentages: Mapping[CurtailReason, float]
    curtailed_mw: Mapping[CurtailReason, float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def _in_hours(hour: int, hour_range: tuple[int, int]) -> bool:
    h0, h1 = hour_range
    if h0 <= h1:
        return h0 <= hour < h1
    return hour >= h0 or hour < h1


def curtailment_breakdown(records: Iterable, hour_range: tuple[int, int] = (8, 11)) -> CurtailmentBreakdown:
    """Count curtailment rows by reason within ``[h0, h1)`` hours of day.

    ``h1`` may be 24, and a range with ``h0 > h1`` wraps past midnight.
    Rows without a reason are ignored.
    """
    counts: dict[CurtailReason, int] = defaultdict(int)
    mw: dict[CurtailReason, float] = defaultdict(float)
    for rec in records:
        reason = getattr(rec, "curtail_reason", None)
        if reason is None or not _in_hours(rec.hour, hour_range):
            continue
        counts[reason] += 1
        mw[reason] += rec.curtailed_wind_mw or 0.0
    total = sum(counts.values())
    ordered = [r for r in CurtailReason if counts.get(r)]
    return CurtailmentBreakdown(
        hour_range=tuple(hour_range),
        counts={r: counts[r] for r in ordered},
        percentages={r: counts[r] / total * 100.0 for r in ordered},
        curtailed_mw={r: mw[r] for r in ordered},
    )


def hourly_curtailment_profile(records: Iterable) -> np.ndarray:
    """Curtailed wind MW summed into 24 hour-of-day slots."""
    profile = np.zeros(24)
    for rec in records:
        value = getattr(rec, "curtailed_wind_mw", None)
        if value:
            profile[rec.hour] += value
    return profile


def system_aggregate(records: Iterable[RegionalHourRecord]) -> list[SystemHour]:
    """Per-hour sums over the four regions; incomplete hours are dropped."""
    by_hour: dict[tuple[date, int], dict[Region, RegionalHourRecord]] = defaultdict(dict)
    for rec in records:
        by_hour[(rec.date, rec.hour)][rec.region] = rec
    out = []
    for (day, hour), regional in sorted(by_hour.items()):
        if len(regional) != len(REGION_ORDER):
            continue
        rows = [regional[r] for r in REGION_ORDER]
        inertia = [r.inertia_mws for r in rows]
        out.append(
            SystemHour(
                date=day,
                hour=hour,
                **{f: sum(getattr(r, f) for r in rows) for f in POWER_FIELDS},
                inertia_mws=None if None in inertia else sum(inertia),
            )
        )
    return out


def hourly_runs(records: Iterable) -> list[list]:
    """Split time-ordered hourly records into runs without missing hours."""
    ordered = sorted(records, key=lambda r: r.start)
    runs: list[list] = []
    for rec in ordered:
        if runs and rec.start - runs[-1][-1].start == timedelta(hours=1):
            runs[-1].append(rec)
        else:
            runs.append([rec])
    return runs


@dataclass(frozen=True, eq=False)
class RampSet:
    """Ramps for one horizon, with the start hour of each window."""

    horizon_h: int
    starts: tuple[datetime, ...]
    ramps_mw: np.ndarray


def ramps_by_horizon(records: Iterable, horizons: Sequence[int] = RAMP_HORIZONS_H) -> dict[int, RampSet]:
    """Net-load ramps per horizon over every contiguous run of hourly data.

    A missing hour splits the sequence; no ramp spans it.
    """
    runs = hourly_runs(records)
    out = {}
    for h in horizons:
        starts: list[datetime] = []
        parts = []
        for run in runs:
            if len(run) <= h:
                continue
            nl = [net_load(r) for r in run]
            parts.append(net_load_ramps(nl, h))
            starts.extend(r.start for r in run[: len(run) - h])
        ramps = np.concatenate(parts) if parts else np.empty(0)
        out[h] = RampSet(horizon_h=h, starts=tuple(starts), ramps_mw=ramps)
    return out
