"""
CSV schemas for PMU frequency streams and hourly grid tables.

PMU files::

    timestamp_ms,frequency_hz
    1689552000000,60.001234

``timestamp_ms`` is integer UTC epoch milliseconds. Missing samples are an
empty field or ``NaN``. Spacing must follow the declared (or inferred)
rate: each timestamp may sit at most 0.6 ms from the ideal grid, i.e.
integer-millisecond rounding plus 0.1 ms of jitter.

Grid tables (dates ISO-8601, hours 0-23)::

    balance:     date,hour,region,hydro_mw,thermal_mw,wind_mw,solar_mw,der_mw,demand_mw
    inertia:     date,hour,region,inertia_mws
    curtailment: date,hour,region,curtailed_wind_mw,reason

Every schema violation raises :class:`InputError` naming the file and the
1-based line number (the header is line 1).
"""

from __future__ import annotations

import csv
import dataclasses
from datetime import date
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .gridmetrics import CurtailmentRecord, CurtailReason, RegionalHourRecord, Region
from .timeseries import TimeSeries, as_rate

PMU_HEADER = ("timestamp_ms", "frequency_hz")
BALANCE_HEADER = (
    "date", "hour", "region", "hydro_mw", "thermal_mw", "wind_mw", "solar_mw", "der_mw", "demand_mw",
)
INERTIA_HEADER = ("date", "hour", "region", "inertia_mws")
CURTAILMENT_HEADER = ("date", "hour", "region", "curtailed_wind_mw", "reason")
SPACING_TOLERANCE_MS = 0.6

# PMU sites and the tabular region each one is analysed against.
SITE_REGIONS = {
    "NE": Region.NE,
    "N": Region.N,
    "CW": Region.SE_CW,
    "SE": Region.SE_CW,
    "S": Region.S,
}


class InputError(ValueError):
    """A file violates its schema."""

    def __init__(self, path, line: int | None, message: str) -> None:
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def _check_header(path: Path, found: Sequence[str], expected: Sequence[str]) -> None:
    if tuple(h.strip() for h in found) != tuple(expected):
        raise InputError(path, 1, f"expected header {','.join(expected)!r}, got {','.join(found)!r}")


def _grid_deviation(ts: np.ndarray, rate: Fraction) -> np.ndarray:
    ideal = (np.arange(ts.size) * 1000.0) * (rate.denominator / rate.numerator)
    return np.abs((ts - ts[0]) - ideal)


def read_pmu_csv(path, sample_rate_hz=None, name: str | None = None) -> TimeSeries:
    """Load one contiguous PMU frequency record.

    When ``sample_rate_hz`` is omitted it is inferred from the first and last
    timestamps and then verified like a declared rate.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(path, None, "file not found")
    with path.open(newline="") as fh:
        header = next(csv.reader(fh), [])
    _check_header(path, header, PMU_HEADER)
    try:
        df = pd.read_csv(
            path, dtype="float64", na_values=["NaN", ""], keep_default_na=False
        )
    except pd.errors.ParserError as exc:
        raise InputError(path, None, f"malformed CSV: {exc}") from None
    except ValueError:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
        for col in PMU_HEADER:
            text = raw[col].str.strip()
            bad = pd.to_numeric(text, errors="coerce").isna() & ~text.isin(["", "NaN"])
            if bad.any():
                i = int(np.flatnonzero(bad.to_numpy())[0])
                raise InputError(path, i + 2, f"{col} is not numeric: {raw[col].iloc[i]!r}") from None
        raise InputError(path, None, "unparseable values") from None
    if df.empty:
        raise InputError(path, None, "no data rows")
    ts = df["timestamp_ms"].to_numpy()
    bad = ~np.isfinite(ts) | (ts != np.round(ts))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InputError(path, i + 2, "timestamp_ms must be an integer")
    ts = ts.astype(np.int64)
    n = ts.size
    if sample_rate_hz is None:
        if n < 2 or ts[-1] <= ts[0]:
            raise InputError(path, None, "cannot infer sample rate; declare it")
        # Prefer the simplest rate whose grid fits every timestamp.
        raw = Fraction(1000 * (n - 1), int(ts[-1] - ts[0]))
        for max_den in (1, 10, 100, 1000):
            rate = raw.limit_denominator(max_den)
            if _grid_deviation(ts, rate).max() <= SPACING_TOLERANCE_MS:
                break
    else:
        rate = as_rate(sample_rate_hz)
    dev = _grid_deviation(ts, rate)
    if n and dev.max() > SPACING_TOLERANCE_MS:
        i = int(np.argmax(dev > SPACING_TOLERANCE_MS))
        raise InputError(
            path, i + 2,
            f"timestamp {ts[i]} deviates {dev[i]:.3f} ms from a uniform {float(rate)} Hz grid",
        )
    return TimeSeries(
        start_ms=int(ts[0]),
        sample_rate_hz=rate,
        values=df["frequency_hz"].to_numpy(),
        name=name if name is not None else path.stem,
    )


def grid_timestamps_ms(series: TimeSeries) -> np.ndarray:
    """Integer-ms timestamps of every sample, rounded half up."""
    start = Fraction(series.start_ms)
    rate = series.sample_rate_hz
    i = np.arange(len(series), dtype=np.int64)
    num = i * (1000 * rate.denominator * start.denominator) + start.numerator * rate.numerator
    den = rate.numerator * start.denominator
    return (2 * num + den) // (2 * den)


def write_pmu_csv(series: TimeSeries, path, decimals: int = 6) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(
        {"timestamp_ms": grid_timestamps_ms(series), "frequency_hz": series.values}
    )
    df.to_csv(path, index=False, float_format=f"%.{decimals}f", na_rep="NaN", lineterminator="\n")


def load_pmu_dir(directory, sample_rate_hz=None) -> dict[str, list[TimeSeries]]:
    """PMU records per site from ``<dir>/<SITE>.csv`` or ``<dir>/<SITE>/*.csv``.

    Sites are returned in :data:`SITE_REGIONS` order; files within a site are
    ordered by start time.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(directory, None, "PMU directory not found")
    out: dict[str, list[TimeSeries]] = {}
    for site in SITE_REGIONS:
        files = []
        if (directory / f"{site}.csv").is_file():
            files.append(directory / f"{site}.csv")
        if (directory / site).is_dir():
            files.extend(sorted((directory / site).glob("*.csv")))
        if files:
            records = [read_pmu_csv(f, sample_rate_hz, name=site) for f in files]
            out[site] = sorted(records, key=lambda s: Fraction(s.start_ms))
    if not out:
        raise InputError(directory, None, f"no PMU files for any of {list(SITE_REGIONS)}")
    return out


def _rows(path: Path, expected: Sequence[str], optional: Sequence[str] = ()) -> Iterable[tuple[int, dict]]:
    if not path.is_file():
        raise InputError(path, None, "file not found")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        required = [c for c in expected if c not in optional]
        if not set(required) <= set(header) or not set(header) <= set(expected) or len(set(header)) != len(header):
            raise InputError(path, 1, f"expected header {','.join(expected)!r}, got {','.join(header)!r}")
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(path, line, f"expected {len(header)} fields, got {len(row)}")
            yield line, dict(zip(header, (c.strip() for c in row)))


def _parse_key(path: Path, line: int, row: dict) -> tuple[date, int, Region]:
    try:
        day = date.fromisoformat(row["date"])
    except ValueError:
        raise InputError(path, line, f"bad date {row['date']!r} (want YYYY-MM-DD)") from None
    try:
        hour = int(row["hour"])
    except ValueError:
        raise InputError(path, line, f"bad hour {row['hour']!r}") from None
    if not 0 <= hour <= 23:
        raise InputError(path, line, f"hour {hour} outside 0-23")
    try:
        region = Region.parse(row["region"])
    except ValueError as exc:
        raise InputError(path, line, str(exc)) from None
    return day, hour, region


def _parse_mw(path: Path, line: int, row: dict, col: str) -> float:
    text = row[col]
    try:
        value = float(text)
    except ValueError:
        raise InputError(path, line, f"{col} is not a number: {text!r}") from None
    if not np.isfinite(value) or value < 0:
        raise InputError(path, line, f"{col} must be finite and >= 0, got {text}")
    return value


def read_balance_csv(path, combined_solar: bool = False) -> list[RegionalHourRecord]:
    """Hourly generation and demand per region, in file order.

    With ``combined_solar`` the ``der_mw`` column may be omitted; DER is then
    taken as already included in ``solar_mw``.
    """
    path = Path(path)
    records = []
    seen: dict[tuple, int] = {}
    optional = ("der_mw",) if combined_solar else ()
    for line, row in _rows(path, BALANCE_HEADER, optional):
        day, hour, region = _parse_key(path, line, row)
        key = (day, hour, region)
        if key in seen:
            raise InputError(path, line, f"duplicate {region.value} {day} hour {hour} (first at line {seen[key]})")
        seen[key] = line
        powers = {
            col: _parse_mw(path, line, row, col)
            for col in BALANCE_HEADER[3:]
            if col in row
        }
        powers.setdefault("der_mw", 0.0)
        records.append(RegionalHourRecord(region=region, date=day, hour=hour, **powers))
    return records


def read_inertia_csv(path) -> dict[tuple[date, int, Region], float]:
    path = Path(path)
    out: dict[tuple[date, int, Region], float] = {}
    for line, row in _rows(path, INERTIA_HEADER):
        key = _parse_key(path, line, row)
        if key in out:
            raise InputError(path, line, f"duplicate inertia row for {key[2].value} {key[0]} hour {key[1]}")
        out[key] = _parse_mw(path, line, row, "inertia_mws")
    return out


def read_curtailment_csv(path) -> list[CurtailmentRecord]:
    path = Path(path)
    out = []
    for line, row in _rows(path, CURTAILMENT_HEADER):
        day, hour, region = _parse_key(path, line, row)
        try:
            reason = CurtailReason(row["reason"].strip().lower())
        except ValueError:
            raise InputError(
                path, line,
                f"unknown reason {row['reason']!r}; expected one of {[r.value for r in CurtailReason]}",
            ) from None
        out.append(
            CurtailmentRecord(
                region=region, date=day, hour=hour,
                curtailed_wind_mw=_parse_mw(path, line, row, "curtailed_wind_mw"),
                curtail_reason=reason,
            )
        )
    return out


def merge_inertia(
    records: Iterable[RegionalHourRecord], inertia: dict[tuple[date, int, Region], float]
) -> list[RegionalHourRecord]:
    return [
        dataclasses.replace(r, inertia_mws=inertia.get((r.date, r.hour, r.region)))
        for r in records
    ]


def _fmt(value: float, decimals: int = 3) -> str:
    return f"{value:.{decimals}f}"


def write_balance_csv(records: Iterable[RegionalHourRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BALANCE_HEADER)
        for r in records:
            w.writerow([r.date.isoformat(), r.hour, r.region.value] + [_fmt(getattr(r, c)) for c in BALANCE_HEADER[3:]])


def write_inertia_csv(records: Iterable[RegionalHourRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INERTIA_HEADER)
        for r in records:
            if r.inertia_mws is not None:
                w.writerow([r.date.isoformat(), r.hour, r.region.value, _fmt(r.inertia_mws)])


def write_curtailment_csv(records: Iterable[CurtailmentRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURTAILMENT_HEADER)
        for r in records:
            w.writerow([r.date.isoformat(), r.hour, r.region.value, _fmt(r.curtailed_wind_mw), r.curtail_reason.value])

