"""
Regional frequency-response framework.

Four stages run in order: hourly IBR penetration, critical-week selection,
extraction of local fluctuations (QSS/dynamic split of every group window),
and evaluation of the dynamic components (histograms, autocorrelation,
correlation with inertia and penetration, oscillation screening).
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import stats
from .gridmetrics import Region, RegionalHourRecord, ibr_penetration
from .ingest import SITE_REGIONS
from .timeseries import DEFAULT_MAX_GAP_SAMPLES, TimeSeries, fill_gaps, to_epoch_ms
from .vmd import DecompositionSplit, VmdConfig, split_qss_dynamic

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GROUP_I_HOURS = (9, 12)
GROUP_II_HOURS = (21, 24)
CORRELATION_SCOPES = ("groups", "week")


class GroupLabel(Enum):
    GROUP_I = "GroupI"
    GROUP_II = "GroupII"


class InsufficientDataError(ValueError):
    """No run of seven complete, consecutive days exists."""


class StageError(RuntimeError):
    """A framework stage failed; ``stage`` names which one."""

    def __init__(self, stage: str, message: str) -> None:
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass(frozen=True)
class CriticalWeek:
    start_date: date
    end_date: date
    region: Region
    mean_penetration_pct: float

    def __post_init__(self) -> None:
        if self.end_date - self.start_date != timedelta(days=6):
            raise ValueError("a critical week spans exactly 7 days")

    @property
    def days(self) -> list[date]:
        return [self.start_date + timedelta(days=k) for k in range(7)]

    def to_dict(self) -> dict:
        return {
            "region": self.region.value,
            "start_date": self.start_date.isoformat(),
            "end_date": self.end_date.isoformat(),
            "mean_penetration_pct": self.mean_penetration_pct,
        }


def _day_hours(records: Iterable[RegionalHourRecord], region: Region) -> dict[date, list[float]]:
    by_day: dict[date, dict[int, float]] = {}
    for r in records:
        if r.region is region:
            by_day.setdefault(r.date, {})[r.hour] = ibr_penetration(r)
    return {d: [h[i] for i in range(24)] for d, h in by_day.items() if len(h) == 24}


def select_critical_week(records: Iterable[RegionalHourRecord], region: Region) -> CriticalWeek:
    """Day-aligned 7-day window with the highest mean hourly penetration.

    Only windows of seven consecutive complete days (24 hours each) are
    considered. Ties go to the earliest start.
    """
    days = _day_hours(records, region)
    best: tuple[float, date] | None = None
    for start in sorted(days):
        span = [start + timedelta(days=k) for k in range(7)]
        if not all(d in days for d in span):
            continue
        mean = math.fsum(v for d in span for v in days[d]) / 168.0
        if best is None or mean > best[0]:
            best = (mean, start)
    if best is None:
        raise InsufficientDataError(f"{region.value}: no 7 consecutive days of complete hourly data")
    return CriticalWeek(best[1], best[1] + timedelta(days=6), region, best[0])


@dataclass(frozen=True)
class SkippedWindow:
    site: str
    day: date
    hour_range: tuple[int, int]
    reason: str

    def to_dict(self) -> dict:
        return {
            "site": self.site,
            "day": self.day.isoformat(),
            "hour_range": list(self.hour_range),
            "reason": self.reason,
        }


@dataclass(frozen=True, eq=False)
class WindowSplit:
    """One site's decomposition over one group window of one day."""

    site: str
    day: date
    hour_range: tuple[int, int]
    series: TimeSeries
    split: DecompositionSplit

    @property
    def qss(self) -> TimeSeries:
        return self.split.qss

    @property
    def dynamic(self) -> TimeSeries:
        return self.split.dynamic


@dataclass(frozen=True, eq=False)
class GroupDataset:
    label: GroupLabel
    hour_range: tuple[int, int]
    windows: Mapping[str, tuple[WindowSplit, ...]]
    skipped: tuple[SkippedWindow, ...] = ()

    @property
    def sites(self) -> list[str]:
        return list(self.windows)

    def dynamic(self, site: str) -> list[TimeSeries]:
        return [w.dynamic for w in self.windows.get(site, ())]

    def concatenated(self, site: str) -> np.ndarray:
        parts = self.dynamic(site)
        return np.concatenate([p.values for p in parts]) if parts else np.empty(0)


def _window_bounds(day: date, hour_range: tuple[int, int]) -> tuple[Fraction, Fraction]:
    midnight = datetime(day.year, day.month, day.day)
    return (
        to_epoch_ms(midnight + timedelta(hours=hour_range[0])),
        to_epoch_ms(midnight + timedelta(hours=hour_range[1])),
    )


def assemble_window(pieces: Sequence[TimeSeries], start_ms: Fraction, end_ms: Fraction) -> TimeSeries | None:
    """Place every piece's samples on the window's uniform grid.

    Samples not supplied by any piece are gaps. Returns ``None`` when no
    piece overlaps the window. Pieces must share one rate and grid phase.
    """
    pieces = [p for p in pieces if Fraction(p.start_ms) < end_ms and p.end_ms > start_ms]
    if not pieces:
        return None
    rate = pieces[0].sample_rate_hz
    n = (end_ms - start_ms) * rate / 1000
    if n.denominator != 1:
        raise ValueError(f"window of {end_ms - start_ms} ms is not a whole number of samples at {rate} Hz")
    n = int(n)
    values = np.full(n, np.nan)
    for p in pieces:
        if p.sample_rate_hz != rate:
            raise ValueError(f"mixed sample rates {rate} and {p.sample_rate_hz} Hz")
        offset = (Fraction(p.start_ms) - start_ms) * rate / 1000
        if offset.denominator != 1:
            raise ValueError("pieces are not aligned to a common sample grid")
        offset = int(offset)
        a, b = max(offset, 0), min(offset + len(p), n)
        src = p.values[a - offset : b - offset]
        keep = ~np.isnan(src)
        values[a:b][keep] = src[keep]
    return TimeSeries(start_ms=start_ms, sample_rate_hz=rate, values=values, name=pieces[0].name)


def _decompose_windows(
    pmu: Mapping[str, Sequence[TimeSeries]],
    days: Sequence[date],
    hour_range: tuple[int, int],
    vmd_config: VmdConfig,
    max_gap_samples: int,
    workers: int = 1,
) -> tuple[dict[str, tuple[WindowSplit, ...]], list[SkippedWindow]]:
    jobs: list[tuple[str, date, TimeSeries]] = []
    skipped: list[SkippedWindow] = []
    for site, pieces in pmu.items():
        for day in days:
            start, end = _window_bounds(day, hour_range)
            raw = assemble_window(pieces, start, end)
            reason = None
            if raw is None:
                reason = "no data"
            else:
                filled = fill_gaps(raw, max_gap_samples)
                if filled.has_gaps:
                    runs = filled.meta["unfilled_runs"]
                    reason = f"{len(runs)} unfillable gap run(s), longest {max(b - a for a, b, _ in runs)} samples"
            if reason is not None:
                log.warning("skipping %s %s %02d-%02dh: %s", site, day, *hour_range, reason)
                skipped.append(SkippedWindow(site, day, hour_range, reason))
                continue
            jobs.append((site, day, filled.replace(name=site)))

    def run(job):
        return split_qss_dynamic(job[2], vmd_config)

    if workers > 1 and len(jobs) > 1:
        # The solver kernel releases the GIL; map keeps the input order.
        with ThreadPoolExecutor(max_workers=workers) as pool:
            splits = list(pool.map(run, jobs))
    else:
        splits = [run(job) for job in jobs]
    windows: dict[str, list[WindowSplit]] = {site: [] for site in pmu}
    for (site, day, series), split in zip(jobs, splits):
        windows[site].append(WindowSplit(site, day, hour_range, series, split))
    return {site: tuple(ws) for site, ws in windows.items()}, skipped


def form_groups(
    pmu: Mapping[str, Sequence[TimeSeries]],
    days: Sequence[date],
    vmd_config: VmdConfig | None = None,
    group_hours: tuple[tuple[int, int], tuple[int, int]] = (GROUP_I_HOURS, GROUP_II_HOURS),
    max_gap_samples: int = DEFAULT_MAX_GAP_SAMPLES,
    workers: int = 1,
) -> tuple[GroupDataset, GroupDataset]:
    """Split each day's Group I and Group II windows into QSS and dynamic parts.

    Windows whose gaps cannot be filled (or that have no data) are skipped
    and logged rather than aborting the run.
    """
    vmd_config = vmd_config or VmdConfig(n_modes=3)
    out = []
    for label, hours in zip(GroupLabel, group_hours):
        windows, skipped = _decompose_windows(pmu, days, tuple(hours), vmd_config, max_gap_samples, workers)
        out.append(GroupDataset(label, tuple(hours), windows, tuple(skipped)))
    return out[0], out[1]


@dataclass(frozen=True)
class FrameworkSettings:
    """Knobs of :func:`evaluate_framework`.

    ``correlation_scope="groups"`` computes hourly spreads only over the
    group windows; ``"week"`` additionally decomposes every other 3-hour
    block of the week.
    """

    region: Region = Region.NE
    vmd: VmdConfig = field(default_factory=lambda: VmdConfig(n_modes=3, alpha=2000.0))
    group_hours: tuple[tuple[int, int], tuple[int, int]] = (GROUP_I_HOURS, GROUP_II_HOURS)
    hist_bin_hz: float = stats.DEFAULT_HIST_BIN_HZ
    acf_max_lag: int = 30
    oscillation_band_hz: tuple[float, float] = (1.0, 5.0)
    oscillation_ratio: float = 10.0
    max_gap_samples: int = DEFAULT_MAX_GAP_SAMPLES
    correlation_scope: str = "groups"
    sigma_min_fraction: float = 0.5
    workers: int = field(default_factory=lambda: min(4, os.cpu_count() or 1))

    def __post_init__(self) -> None:
        if self.correlation_scope not in CORRELATION_SCOPES:
            raise ValueError(f"correlation_scope must be one of {CORRELATION_SCOPES}")
        for h0, h1 in self.group_hours:
            if not 0 <= h0 < h1 <= 24:
                raise ValueError(f"group hours must satisfy 0 <= h0 < h1 <= 24, got {(h0, h1)}")
        if not self.hist_bin_hz > 0:
            raise ValueError("hist_bin_hz must be > 0")
        if self.acf_max_lag < 1:
            raise ValueError("acf_max_lag must be >= 1")
        object.__setattr__(self, "group_hours", tuple(tuple(g) for g in self.group_hours))

    def to_dict(self) -> dict:
        v = self.vmd
        return {
            "region": self.region.value,
            "vmd": {
                "n_modes": v.n_modes, "alpha": v.alpha, "tau": v.tau, "tol": v.tol,
                "max_iters": v.max_iters, "init": v.init, "seed": v.seed,
            },
            "group_hours": {g.value: list(h) for g, h in zip(GroupLabel, self.group_hours)},
            "hist_bin_hz": self.hist_bin_hz,
            "acf_max_lag": self.acf_max_lag,
            "oscillation_band_hz": list(self.oscillation_band_hz),
            "oscillation_ratio": self.oscillation_ratio,
            "max_gap_samples": self.max_gap_samples,
            "correlation_scope": self.correlation_scope,
        }


@dataclass(frozen=True, eq=False)
class SiteGroupStats:
    site: str
    n_windows: int
    histogram: stats.HistogramResult
    acf: tuple[tuple[date, np.ndarray], ...]
    mean_penetration_pct: float | None


@dataclass(frozen=True, eq=False)
class OscillationResult:
    site: str
    flagged: bool
    windows_flagged: int
    n_windows: int
    peaks: tuple[stats.SpectrumPeak, ...]
    mean_spectrum: tuple[np.ndarray, np.ndarray] | None


@dataclass(frozen=True, eq=False)
class FrameworkReport:
    settings: FrameworkSettings
    critical_week: CriticalWeek
    groups: tuple[GroupDataset, GroupDataset]
    group_stats: Mapping[GroupLabel, Mapping[str, SiteGroupStats]]
    correlations: Mapping[str, dict]
    inertia_available: bool
    oscillations: Mapping[str, OscillationResult]
    warnings: tuple[str, ...]
    stage_summaries: tuple[str, ...]

    def to_dict(self) -> dict:
        groups = {}
        for ds in self.groups:
            sites = {}
            for site, st in self.group_stats[ds.label].items():
                h = st.histogram
                sites[site] = {
                    "region": SITE_REGIONS[site].value,
                    "windows": st.n_windows,
                    "n_samples": h.n_samples,
                    "std_hz": h.std,
                    "skewness": h.skewness,
                    "mean_penetration_pct": st.mean_penetration_pct,
                    "histogram_csv": f"histograms/{ds.label.value}_{site}.csv",
                    "acf_csv": f"acf/{ds.label.value}_{site}.csv",
                    "acf_mean": np.mean([r for _, r in st.acf], axis=0).tolist() if st.acf else None,
                }
            groups[ds.label.value] = {
                "hour_range": list(ds.hour_range),
                "sites": sites,
                "skipped": [s.to_dict() for s in ds.skipped],
            }
        corr: dict = {"scope": self.settings.correlation_scope, "sites": dict(self.correlations)}
        if not self.inertia_available:
            corr["missing"] = ["inertia"]
        osc = {}
        for site, o in self.oscillations.items():
            osc[site] = {
                "flagged": o.flagged,
                "windows_flagged": o.windows_flagged,
                "windows": o.n_windows,
                "peaks": [
                    {"freq_hz": p.freq_hz, "amplitude": p.amplitude, "prominence": p.prominence}
                    for p in o.peaks
                ],
                "spectrum_csv": f"spectra/{site}.csv" if o.mean_spectrum is not None else None,
            }
        return {
            "schema_version": SCHEMA_VERSION,
            "settings": self.settings.to_dict(),
            "critical_week": self.critical_week.to_dict(),
            "groups": groups,
            "correlations": corr,
            "oscillations": {
                "band_hz": list(self.settings.oscillation_band_hz),
                "prominence_ratio": self.settings.oscillation_ratio,
                "sites": osc,
            },
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, out_dir) -> Path:
        """Write ``report.json`` plus ``histograms/``, ``acf/`` and ``spectra/`` CSVs."""
        out = Path(out_dir)
        for sub in ("histograms", "acf", "spectra"):
            (out / sub).mkdir(parents=True, exist_ok=True)
        for label, per_site in self.group_stats.items():
            for site, st in per_site.items():
                h = st.histogram.histogram
                lines = ["bin_lo_hz,bin_hi_hz,count"]
                lines += [f"{a:.6f},{b:.6f},{int(c)}" for a, b, c in zip(h.edges[:-1], h.edges[1:], h.counts)]
                (out / "histograms" / f"{label.value}_{site}.csv").write_text("\n".join(lines) + "\n")
                lags = self.settings.acf_max_lag
                lines = ["window_start," + ",".join(f"lag{k}" for k in range(lags + 1))]
                lines += [d.isoformat() + "," + ",".join(repr(float(v)) for v in r) for d, r in st.acf]
                (out / "acf" / f"{label.value}_{site}.csv").write_text("\n".join(lines) + "\n")
        for site, o in self.oscillations.items():
            if o.mean_spectrum is None:
                continue
            freqs, amp = o.mean_spectrum
            lines = ["freq_hz,amplitude_hz"] + [f"{f!r},{a!r}" for f, a in zip(freqs.tolist(), amp.tolist())]
            (out / "spectra" / f"{site}.csv").write_text("\n".join(lines) + "\n")
        path = out / "report.json"
        path.write_text(self.to_json())
        return path


def _utc_hour(hour_ms: int) -> tuple[date, int]:
    t = datetime(1970, 1, 1) + timedelta(milliseconds=hour_ms)
    return t.date(), t.hour


def _site_correlation(
    windows: Iterable[WindowSplit],
    by_key: Mapping[tuple[date, int, Region], RegionalHourRecord],
    region: Region,
    min_fraction: float,
) -> dict:
    sigma, pen, inertia = [], [], []
    seen = set()
    for w in windows:
        for hour_ms, s in stats.hourly_sigma(w.dynamic, min_fraction):
            day, hour = _utc_hour(hour_ms)
            rec = by_key.get((day, hour, region))
            if rec is None or (day, hour) in seen:
                continue
            seen.add((day, hour))
            sigma.append(s)
            pen.append(ibr_penetration(rec))
            inertia.append(rec.inertia_mws)
    out: dict = {"region": region.value, "n_hours": len(sigma), "r_inertia": None, "r_ibr": None}
    if len(sigma) < 3:
        out["note"] = "fewer than 3 aligned hours"
        return out
    try:
        out["r_ibr"] = stats.pearson(sigma, pen)
    except stats.UndefinedCorrelationError as exc:
        out["note"] = str(exc)
    have = [i for i, v in enumerate(inertia) if v is not None]
    if len(have) >= 3:
        try:
            out["r_inertia"] = stats.pearson([sigma[i] for i in have], [inertia[i] for i in have])
            out["n_hours_inertia"] = len(have)
        except stats.UndefinedCorrelationError as exc:
            out["note"] = str(exc)
    return out


def _oscillations(site: str, windows: Sequence[WindowSplit], settings: FrameworkSettings) -> OscillationResult:
    flagged = 0
    strongest: tuple[stats.SpectrumPeak, ...] = ()
    spectra: dict[int, list[np.ndarray]] = {}
    freqs_by_len: dict[int, np.ndarray] = {}
    for w in windows:
        dyn = w.dynamic
        peaks = stats.detect_oscillations(dyn, settings.oscillation_band_hz, settings.oscillation_ratio)
        if peaks:
            flagged += 1
            if not strongest or peaks[0].amplitude > strongest[0].amplitude:
                strongest = tuple(peaks[:5])
        freqs, amp = stats.amplitude_spectrum(dyn)
        spectra.setdefault(len(dyn), []).append(amp)
        freqs_by_len[len(dyn)] = freqs
    mean_spectrum = None
    if spectra:
        # Average over the most common window length.
        n = max(spectra, key=lambda k: (len(spectra[k]), k))
        mean_spectrum = (freqs_by_len[n], np.mean(spectra[n], axis=0))
    return OscillationResult(site, flagged > 0, flagged, len(windows), strongest, mean_spectrum)


def _week_blocks(group_hours, block_h: int = 3) -> list[tuple[int, int]]:
    blocks = [(h, h + block_h) for h in range(0, 24, block_h)]
    return [b for b in blocks if b not in group_hours]


def evaluate_framework(
    records: Sequence[RegionalHourRecord],
    pmu: Mapping[str, Sequence[TimeSeries]],
    settings: FrameworkSettings | None = None,
) -> FrameworkReport:
    """Run penetration, critical-week, extraction and evaluation stages.

    ``records`` carry inertia in ``inertia_mws`` when available; without any
    inertia the correlation section reports only ``r_ibr``. Any stage
    failure raises :class:`StageError` tagged with the stage name.
    """
    settings = settings or FrameworkSettings()
    summaries: list[str] = []
    warnings: list[str] = []

    try:
        by_key = {(r.date, r.hour, r.region): r for r in records}
        pens = [ibr_penetration(r) for r in records]
    except ValueError as exc:
        raise StageError("penetration", str(exc)) from exc
    summaries.append(f"penetration: {len(pens)} region-hours")

    try:
        week = select_critical_week(records, settings.region)
    except ValueError as exc:
        raise StageError("critical_week", str(exc)) from exc
    summaries.append(
        f"critical_week: {week.region.value} {week.start_date}..{week.end_date} "
        f"mean {week.mean_penetration_pct:.2f}%"
    )

    pmu = {site: pmu[site] for site in SITE_REGIONS if site in pmu}
    if not pmu:
        raise StageError("vmd", f"no PMU data for any site in {list(SITE_REGIONS)}")
    try:
        groups = form_groups(
            pmu, week.days, settings.vmd, settings.group_hours, settings.max_gap_samples, settings.workers
        )
        extra: dict[str, list[WindowSplit]] = {site: [] for site in pmu}
        if settings.correlation_scope == "week":
            for block in _week_blocks(settings.group_hours):
                windows, _ = _decompose_windows(
                    pmu, week.days, block, settings.vmd, settings.max_gap_samples, settings.workers
                )
                for site, ws in windows.items():
                    extra[site].extend(ws)
    except ValueError as exc:
        raise StageError("vmd", str(exc)) from exc
    all_windows = [w for g in groups for ws in g.windows.values() for w in ws]
    n_conv = sum(w.split.decomposition.converged for w in all_windows)
    summaries.append(f"vmd: {len(all_windows)} group windows, {n_conv} converged")
    for g in groups:
        for s in g.skipped:
            warnings.append(f"{g.label.value} {s.site} {s.day.isoformat()} skipped: {s.reason}")
    if not all_windows:
        raise StageError("vmd", "no group window could be decomposed")

    inertia_available = any(r.inertia_mws is not None for r in records)
    if not inertia_available:
        warnings.append("no inertia data: correlation section reports r_ibr only")
    try:
        group_stats: dict[GroupLabel, dict[str, SiteGroupStats]] = {}
        for g in groups:
            per_site = {}
            for site, windows in g.windows.items():
                if not windows:
                    continue
                region = SITE_REGIONS[site]
                data = g.concatenated(site)
                acfs = tuple((w.day, stats.acf(w.dynamic, settings.acf_max_lag)) for w in windows)
                hour_pens = [
                    ibr_penetration(by_key[(w.day, h, region)])
                    for w in windows
                    for h in range(*g.hour_range)
                    if (w.day, h, region) in by_key
                ]
                per_site[site] = SiteGroupStats(
                    site=site,
                    n_windows=len(windows),
                    histogram=stats.histogram(data, settings.hist_bin_hz),
                    acf=acfs,
                    mean_penetration_pct=math.fsum(hour_pens) / len(hour_pens) if hour_pens else None,
                )
            group_stats[g.label] = per_site
        correlations = {}
        for site in pmu:
            windows = [w for g in groups for w in g.windows.get(site, ())] + extra[site]
            correlations[site] = _site_correlation(
                windows, by_key, SITE_REGIONS[site], settings.sigma_min_fraction
            )
        oscillations = {
            site: _oscillations(site, [w for g in groups for w in g.windows.get(site, ())], settings)
            for site in pmu
        }
    except ValueError as exc:
        raise StageError("stats", str(exc)) from exc
    flagged = [s for s, o in oscillations.items() if o.flagged]
    summaries.append(
        f"stats: {sum(len(v) for v in group_stats.values())} site-group histograms, "
        f"oscillations flagged at {', '.join(flagged) if flagged else 'no site'}"
    )
    return FrameworkReport(
        settings=settings,
        critical_week=week,
        groups=groups,
        group_stats=group_stats,
        correlations=correlations,
        inertia_available=inertia_available,
        oscillations=oscillations,
        warnings=tuple(warnings),
        stage_summaries=tuple(summaries),
    )
