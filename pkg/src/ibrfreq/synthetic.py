"""
Deterministic synthetic inputs standing in for measured PMU and grid data.

The generator produces a year (or any span) of hourly regional balance
records with inertia, curtailment orders, and 60 Hz frequency streams for
the five PMU sites. Each frequency stream is

    60 Hz + common slow trend + site wander + optional tone + white noise

where the white-noise spread of every hour can be tied to the regional IBR
penetration and inertia of that hour. Random streams are keyed by
``(seed, purpose, ...)`` so outputs are bit-identical for a given scenario
and do not depend on which parts are requested.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Mapping

import numpy as np

from .gridmetrics import CurtailmentRecord, CurtailReason, Region, RegionalHourRecord, ibr_penetration
from .ingest import SITE_REGIONS
from .timeseries import TimeSeries, to_epoch_ms

NOMINAL_HZ = 60.0
COVERAGES = ("full", "groups")

_STREAM_BALANCE = 1
_STREAM_CURTAIL = 2
_STREAM_PMU = 3
_STREAM_PHASE = 4


@dataclass(frozen=True)
class RegionProfile:
    """Annual mean generation and demand (MW) plus inertia (MW·s)."""

    hydro_mw: float
    thermal_mw: float
    wind_mw: float
    solar_mw: float
    der_mw: float
    demand_mw: float
    inertia_mws: float

    @property
    def sync_mw(self) -> float:
        return self.hydro_mw + self.thermal_mw

    @property
    def ibr_mw(self) -> float:
        return self.wind_mw + self.solar_mw + self.der_mw


# 2023 regional averages; centralised solar and DER split roughly 40/60.
DEFAULT_PROFILES: Mapping[Region, RegionProfile] = {
    Region.N: RegionProfile(7969.0, 1420.0, 210.0, 83.0, 125.0, 7140.0, 58318.0),
    Region.NE: RegionProfile(4018.0, 540.0, 10009.0, 728.0, 1093.0, 12117.0, 27198.0),
    Region.S: RegionProfile(9288.0, 1034.0, 662.0, 224.0, 337.0, 12567.0, 60586.0),
    Region.SE_CW: RegionProfile(29192.0, 5256.0, 7.0, 928.0, 1391.0, 41881.0, 178207.0),
}

# Energy balance / reliability / external unavailability shares of curtailment rows.
DEFAULT_REASON_SHARES = (0.5185, 0.2594, 0.2221)


@dataclass(frozen=True)
class SiteParams:
    """Frequency-stream parameters for one PMU site.

    Parameters
    ----------
    noise_mhz : float
        White-noise standard deviation at reference conditions.
    coupling : float
        Share of the noise spread that scales with penetration: the hourly
        spread is ``noise * ((1 - c) + c * pen / pen_ref)``.
    inertia_coupling : float
        Exponent ``g`` of an extra factor ``(inertia_ref / inertia) ** g``.
    tone_hz, tone_mhz : float
        Optional sustained oscillation; off when either is zero.
    """

    noise_mhz: float = 2.0
    coupling: float = 0.0
    inertia_coupling: float = 0.0
    tone_hz: float = 0.0
    tone_mhz: float = 0.0

    def __post_init__(self) -> None:
        if self.noise_mhz < 0 or self.tone_mhz < 0 or self.tone_hz < 0:
            raise ValueError("noise, tone amplitude and tone frequency must be >= 0")
        if not 0 <= self.coupling <= 1:
            raise ValueError(f"coupling must be in [0, 1], got {self.coupling}")
        if self.inertia_coupling < 0:
            raise ValueError("inertia_coupling must be >= 0")


def default_sites() -> dict[str, SiteParams]:
    sites = {name: SiteParams() for name in SITE_REGIONS}
    sites["NE"] = SiteParams(coupling=1.0, tone_hz=2.5, tone_mhz=3.0)
    return sites


@dataclass(frozen=True)
class SyntheticScenario:
    """Everything that shapes a synthetic data set.

    The balance tables span ``days`` days from ``start_date``. The week
    beginning ``peak_week_start`` gets its IBR output boosted in
    ``critical_region``, which is then rescaled so the week's mean
    penetration equals ``peak_penetration_pct`` (when set). PMU streams
    cover ``pmu_days`` days from ``pmu_start`` (default: the peak week),
    either whole days or only the group windows.
    """

    seed: int = 42
    start_date: date = date(2023, 1, 1)
    days: int = 365
    peak_week_start: date = date(2023, 7, 17)
    critical_region: Region = Region.NE
    peak_boost: float = 1.35
    peak_penetration_pct: float | None = 140.0
    pmu_start: date | None = None
    pmu_days: int = 7
    pmu_rate_hz: int = 30
    pmu_coverage: str = "groups"
    group_hours: tuple[tuple[int, int], ...] = ((9, 12), (21, 24))
    trend_mhz: float = 20.0
    dropouts_per_hour: float = 0.0
    max_dropout_samples: int = 20
    curtailment_rows_per_day: float = 40.0
    sites: Mapping[str, SiteParams] = field(default_factory=default_sites)

    def __post_init__(self) -> None:
        if self.days < 1 or self.pmu_days < 0:
            raise ValueError("days must be >= 1 and pmu_days >= 0")
        if self.pmu_rate_hz < 1:
            raise ValueError("pmu_rate_hz must be >= 1")
        if self.pmu_coverage not in COVERAGES:
            raise ValueError(f"pmu_coverage must be one of {COVERAGES}, got {self.pmu_coverage!r}")
        for h0, h1 in self.group_hours:
            if not 0 <= h0 < h1 <= 24:
                raise ValueError(f"group hours must satisfy 0 <= h0 < h1 <= 24, got {(h0, h1)}")
        unknown = set(self.sites) - set(SITE_REGIONS)
        if unknown:
            raise ValueError(f"unknown sites {sorted(unknown)}; expected {list(SITE_REGIONS)}")
        if self.peak_boost <= 0 or self.trend_mhz < 0 or self.dropouts_per_hour < 0:
            raise ValueError("peak_boost must be > 0; trend and dropout rate >= 0")
        if self.peak_penetration_pct is not None and self.peak_penetration_pct <= 0:
            raise ValueError("peak_penetration_pct must be > 0")
        object.__setattr__(self, "sites", dict(self.sites))
        object.__setattr__(self, "group_hours", tuple(tuple(g) for g in self.group_hours))

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=self.days)

    @property
    def pmu_first_day(self) -> date:
        return self.pmu_start if self.pmu_start is not None else self.peak_week_start


@dataclass(frozen=True, eq=False)
class SyntheticData:
    scenario: SyntheticScenario
    records: tuple[RegionalHourRecord, ...]
    curtailment: tuple[CurtailmentRecord, ...]
    pmu: Mapping[str, tuple[TimeSeries, ...]]


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng([seed, *keys])


def _diurnal(hours: np.ndarray) -> dict[str, np.ndarray]:
    h = hours + 0.5
    sun = np.clip(np.sin(np.pi * (h - 6.0) / 12.0), 0.0, None)
    return {
        # Evening demand peak, morning trough.
        "demand": 1.0 + 0.12 * np.sin(2 * np.pi * (h - 13.0) / 24.0),
        # Wind strongest through the morning.
        "wind": 1.0 + 0.25 * np.cos(2 * np.pi * (h - 10.0) / 24.0),
        # Unit-mean daylight bell.
        "solar": sun / sun.mean(),
    }


def _balance(sc: SyntheticScenario) -> list[RegionalHourRecord]:
    rng = _rng(sc.seed, _STREAM_BALANCE)
    n_days = sc.days
    hours = np.arange(24)
    shape = _diurnal(hours)
    days = [sc.start_date + timedelta(days=d) for d in range(n_days)]
    doy = np.array([d.timetuple().tm_yday for d in days], dtype=float)
    peak = np.array(
        [0 <= (d - sc.peak_week_start).days < 7 for d in days], dtype=bool
    )
    records: list[RegionalHourRecord] = []
    by_region: dict[Region, dict[str, np.ndarray]] = {}
    for r_idx, region in enumerate(Region):
        prof = DEFAULT_PROFILES[region]
        season_w = 1.0 + 0.25 * np.sin(2 * np.pi * (doy - 100.0) / 365.0)
        season_s = 1.0 + 0.10 * np.sin(2 * np.pi * (doy - 280.0) / 365.0)
        day_w = np.clip(1.0 + rng.normal(0.0, 0.06, n_days), 0.5, None)
        day_d = 1.0 + rng.normal(0.0, 0.02, n_days)
        hour_w = np.clip(1.0 + rng.normal(0.0, 0.03, (n_days, 24)), 0.5, None)
        cloud = np.clip(1.0 + rng.normal(0.0, 0.05, (n_days, 24)), 0.5, None)
        demand = prof.demand_mw * np.outer(day_d, shape["demand"])
        wind = prof.wind_mw * np.outer(season_w * day_w, shape["wind"]) * hour_w
        solar_shape = np.outer(season_s, shape["solar"]) * cloud
        solar = prof.solar_mw * solar_shape
        der = prof.der_mw * solar_shape
        if region is sc.critical_region and peak.any():
            boost = np.where(peak, sc.peak_boost, 1.0)[:, None]
            wind, solar, der = wind * boost, solar * boost, der * boost
            if sc.peak_penetration_pct is not None:
                ibr = wind + solar + der
                current = float(np.mean(ibr[peak] / demand[peak])) * 100.0
                k = np.where(peak, sc.peak_penetration_pct / current, 1.0)[:, None]
                wind, solar, der = wind * k, solar * k, der * k
        pen = (wind + solar + der) / demand * 100.0
        pen_mean = prof.ibr_mw / prof.demand_mw * 100.0
        sync = prof.sync_mw * np.clip(1.0 - 0.5 * (pen - pen_mean) / 100.0, 0.3, 2.0)
        h_const = prof.inertia_mws / prof.sync_mw
        inertia = h_const * sync * np.clip(1.0 + rng.normal(0.0, 0.02, (n_days, 24)), 0.5, None)
        hydro_share = prof.hydro_mw / prof.sync_mw
        by_region[region] = dict(
            hydro=sync * hydro_share, thermal=sync * (1 - hydro_share),
            wind=wind, solar=solar, der=der, demand=demand, inertia=inertia,
        )
    for d, day in enumerate(days):
        for h in hours:
            for region in Region:
                v = by_region[region]
                records.append(
                    RegionalHourRecord(
                        region=region, date=day, hour=int(h),
                        hydro_mw=round(float(v["hydro"][d, h]), 3),
                        thermal_mw=round(float(v["thermal"][d, h]), 3),
                        wind_mw=round(float(v["wind"][d, h]), 3),
                        solar_mw=round(float(v["solar"][d, h]), 3),
                        der_mw=round(float(v["der"][d, h]), 3),
                        demand_mw=round(float(v["demand"][d, h]), 3),
                        inertia_mws=round(float(v["inertia"][d, h]), 3),
                    )
                )
    return records


def _curtailment(sc: SyntheticScenario) -> list[CurtailmentRecord]:
    rng = _rng(sc.seed, _STREAM_CURTAIL)
    hours = np.arange(24)
    profile = np.exp(-(((hours - 9.0) / 1.5) ** 2)) + 0.1
    profile = profile / profile.sum()
    reasons = list(CurtailReason)
    # Wind-heavy regions carry the curtailment.
    regions = (Region.NE, Region.S)
    weights = (0.85, 0.15)
    out = []
    for d in range(sc.days):
        day = sc.start_date + timedelta(days=d)
        counts = rng.poisson(sc.curtailment_rows_per_day * profile)
        for h in hours:
            for _ in range(int(counts[h])):
                region = regions[int(rng.random() > weights[0])]
                reason = reasons[int(rng.choice(3, p=DEFAULT_REASON_SHARES))]
                mw = round(float(rng.gamma(2.0, 25.0)), 3)
                out.append(CurtailmentRecord(region, day, int(h), mw, reason))
    return out


def _pmu_windows(sc: SyntheticScenario) -> list[tuple[date, int, int]]:
    out = []
    for d in range(sc.pmu_days):
        day = sc.pmu_first_day + timedelta(days=d)
        if sc.pmu_coverage == "full":
            out.append((day, 0, 24))
        else:
            out.extend((day, h0, h1) for h0, h1 in sc.group_hours)
    return out


def _hourly_drivers(records, region: Region) -> dict[tuple[date, int], tuple[float, float]]:
    return {
        (r.date, r.hour): (ibr_penetration(r), r.inertia_mws)
        for r in records
        if r.region is region
    }


def _trend_components(sc: SyntheticScenario, key: int) -> list[tuple[float, float, float]]:
    rng = _rng(sc.seed, _STREAM_PHASE, key)
    periods = (3600.0, 1200.0, 480.0, 180.0)
    weights = (1.0, 0.5, 0.3, 0.2)
    return [
        (w * sc.trend_mhz / 1000.0, 1.0 / p, float(rng.uniform(0, 2 * np.pi)))
        for p, w in zip(periods, weights)
    ]


def _pmu(sc: SyntheticScenario, records) -> dict[str, tuple[TimeSeries, ...]]:
    rate = sc.pmu_rate_hz
    per_hour = 3600 * rate
    origin_ms = to_epoch_ms(datetime.combine(sc.pmu_first_day, datetime.min.time()))
    common = _trend_components(sc, 0)
    windows = _pmu_windows(sc)
    out: dict[str, tuple[TimeSeries, ...]] = {}
    for s_idx, site in enumerate(SITE_REGIONS):
        params = sc.sites.get(site)
        if params is None:
            continue
        drivers = _hourly_drivers(records, SITE_REGIONS[site])
        covered = [
            drivers[(day, h)] for day, h0, h1 in windows for h in range(h0, h1) if (day, h) in drivers
        ]
        pen_ref, inertia_ref = 1.0, 1.0
        if covered:
            pen_ref = float(np.mean([c[0] for c in covered]))
            inertia_ref = float(np.mean([c[1] for c in covered]))
        local = [(a * 0.1, f, ph) for a, f, ph in _trend_components(sc, s_idx + 1)]
        tone_phase = float(_rng(sc.seed, _STREAM_PHASE, 100 + s_idx).uniform(0, 2 * np.pi))
        series = []
        for w_idx, (day, h0, h1) in enumerate(windows):
            rng = _rng(sc.seed, _STREAM_PMU, s_idx, w_idx)
            n = (h1 - h0) * per_hour
            start_ms = to_epoch_ms(datetime.combine(day, datetime.min.time()) + timedelta(hours=h0))
            t = float(start_ms - origin_ms) / 1000.0 + np.arange(n) / rate
            x = np.zeros(n)
            for a, f, ph in common + local:
                if a:
                    x += a * np.sin(2 * np.pi * f * t + ph)
            if params.tone_hz and params.tone_mhz:
                x += params.tone_mhz / 1000.0 * np.sin(2 * np.pi * params.tone_hz * t + tone_phase)
            if params.noise_mhz:
                sigma = np.empty(h1 - h0)
                for j, h in enumerate(range(h0, h1)):
                    scale = 1.0
                    if (day, h) in drivers:
                        pen, inertia = drivers[(day, h)]
                        scale = (1.0 - params.coupling) + params.coupling * pen / pen_ref
                        if params.inertia_coupling and inertia:
                            scale *= (inertia_ref / inertia) ** params.inertia_coupling
                    sigma[j] = params.noise_mhz / 1000.0 * scale
                x += rng.standard_normal(n) * np.repeat(sigma, per_hour)
            values = np.round(NOMINAL_HZ + x, 6)
            if sc.dropouts_per_hour > 0:
                for _ in range(int(rng.poisson(sc.dropouts_per_hour * (h1 - h0)))):
                    a = int(rng.integers(1, n - 1))
                    length = int(rng.integers(1, sc.max_dropout_samples + 1))
                    values[a : min(a + length, n - 1)] = np.nan
            series.append(TimeSeries(start_ms=start_ms, sample_rate_hz=rate, values=values, name=site))
        out[site] = tuple(series)
    return out


def generate_synthetic(scenario: SyntheticScenario | None = None, with_pmu: bool = True) -> SyntheticData:
    """Build balance, inertia, curtailment and PMU data for ``scenario``.

    Hourly records carry inertia in ``inertia_mws``. PMU streams are keyed by
    site and ordered by start time.
    """
    sc = scenario or SyntheticScenario()
    records = _balance(sc)
    curtail = _curtailment(sc)
    pmu = _pmu(sc, records) if with_pmu else {}
    return SyntheticData(scenario=sc, records=tuple(records), curtailment=tuple(curtail), pmu=pmu)

