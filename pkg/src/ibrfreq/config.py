"""
Flat ``key = value`` configuration files.

Both run configurations and synthetic scenarios use the same format::

    # comment
    schema_version = 1
    balance = data/balance.csv
    vmd.alpha = 2000

``schema_version`` is mandatory, unknown keys are rejected and relative
paths are resolved against the directory holding the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Any, Callable, Mapping

from .gridmetrics import Region
from .ingest import SITE_REGIONS
from .pipeline import CORRELATION_SCOPES, GROUP_I_HOURS, GROUP_II_HOURS, FrameworkSettings
from .synthetic import SiteParams, SyntheticScenario, default_sites
from .vmd import VmdConfig

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path, line: int | None, message: str) -> None:
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


def read_kv(path) -> dict[str, tuple[str, int]]:
    """Parse the file into ``{key: (raw value, line number)}``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(path, None, "config file not found")
    out: dict[str, tuple[str, int]] = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, value = text.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(path, line_no, f"expected 'key = value', got {line.strip()!r}")
        if key in out:
            raise ConfigError(path, line_no, f"duplicate key {key!r}")
        out[key] = (value.strip(), line_no)
    version = out.pop("schema_version", None)
    if version is None:
        raise ConfigError(path, None, "missing schema_version")
    if version[0] != str(CONFIG_SCHEMA_VERSION):
        raise ConfigError(path, version[1], f"unsupported schema_version {version[0]!r}")
    return out


def parse_hours(text: str) -> tuple[int, int]:
    """``"9-12"`` -> ``(9, 12)``; the end may be 24."""
    a, sep, b = text.partition("-")
    if not sep:
        raise ValueError(f"hour range must look like 9-12, got {text!r}")
    h0, h1 = int(a), int(b)
    if not 0 <= h0 < h1 <= 24:
        raise ValueError(f"hour range must satisfy 0 <= start < end <= 24, got {text!r}")
    return h0, h1


def parse_float_pair(text: str) -> tuple[float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected two numbers like 1,5, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if not lo < hi:
        raise ValueError(f"expected lo < hi, got {text!r}")
    return lo, hi


def parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda text: None if text.lower() in ("", "none") else conv(text)


def _apply(path, raw: Mapping[str, tuple[str, int]], schema: Mapping[str, Callable[[str], Any]]) -> dict[str, Any]:
    out = {}
    for key, (text, line) in raw.items():
        conv = schema.get(key)
        if conv is None:
            raise ConfigError(path, line, f"unknown key {key!r}")
        try:
            out[key] = conv(text)
        except ValueError as exc:
            raise ConfigError(path, line, f"{key}: {exc}") from None
    return out


@dataclass(frozen=True)
class RunConfig:
    """Inputs, outputs and analysis settings for one invocation."""

    pmu: Path | None = None
    balance: Path | None = None
    inertia: Path | None = None
    curtailment: Path | None = None
    out: Path = Path("out")
    pmu_rate_hz: float | None = None
    combined_solar: bool = False
    region: Region = Region.NE
    vmd_modes: int = 3
    vmd_alpha: float = 2000.0
    vmd_tau: float = 0.0
    vmd_tol: float = 1e-7
    vmd_max_iters: int = 500
    vmd_init: str = "uniform"
    group1_hours: tuple[int, int] = GROUP_I_HOURS
    group2_hours: tuple[int, int] = GROUP_II_HOURS
    hist_bin_hz: float = 0.001
    ramp_bin_mw: float = 100.0
    decimate_hz: float | None = None
    acf_max_lag: int = 30
    oscillation_band_hz: tuple[float, float] = (1.0, 5.0)
    oscillation_ratio: float = 10.0
    max_gap_samples: int = 30
    correlation_scope: str = "groups"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.correlation_scope not in CORRELATION_SCOPES:
            raise ValueError(f"correlation_scope must be one of {CORRELATION_SCOPES}")
        if not self.hist_bin_hz > 0 or not self.ramp_bin_mw > 0:
            raise ValueError("bin widths must be > 0")
        self.vmd_config()

    def vmd_config(self) -> VmdConfig:
        return VmdConfig(
            n_modes=self.vmd_modes, alpha=self.vmd_alpha, tau=self.vmd_tau, tol=self.vmd_tol,
            max_iters=self.vmd_max_iters, init=self.vmd_init, seed=self.seed,
        )

    def framework_settings(self) -> FrameworkSettings:
        return FrameworkSettings(
            region=self.region,
            vmd=self.vmd_config(),
            group_hours=(self.group1_hours, self.group2_hours),
            hist_bin_hz=self.hist_bin_hz,
            acf_max_lag=self.acf_max_lag,
            oscillation_band_hz=self.oscillation_band_hz,
            oscillation_ratio=self.oscillation_ratio,
            max_gap_samples=self.max_gap_samples,
            correlation_scope=self.correlation_scope,
        )

    def missing_paths(self, keys) -> list[str]:
        """Names of ``keys`` whose configured path is unset or absent on disk."""
        out = []
        for key in keys:
            p = getattr(self, key)
            if p is None or not Path(p).exists():
                out.append(f"{key}: {p if p is not None else 'not configured'}")
        return out


_PATH_KEYS = ("pmu", "balance", "inertia", "curtailment", "out")

_RUN_KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "pmu": ("pmu", Path),
    "balance": ("balance", Path),
    "inertia": ("inertia", Path),
    "curtailment": ("curtailment", Path),
    "out": ("out", Path),
    "pmu.rate_hz": ("pmu_rate_hz", _optional(float)),
    "balance.combined_solar": ("combined_solar", parse_bool),
    "region": ("region", Region.parse),
    "vmd.modes": ("vmd_modes", int),
    "vmd.alpha": ("vmd_alpha", float),
    "vmd.tau": ("vmd_tau", float),
    "vmd.tol": ("vmd_tol", float),
    "vmd.max_iters": ("vmd_max_iters", int),
    "vmd.init": ("vmd_init", str),
    "group1.hours": ("group1_hours", parse_hours),
    "group2.hours": ("group2_hours", parse_hours),
    "hist.bin_hz": ("hist_bin_hz", float),
    "ramps.bin_mw": ("ramp_bin_mw", float),
    "decimate.target_hz": ("decimate_hz", _optional(float)),
    "acf.max_lag": ("acf_max_lag", int),
    "oscillation.band_hz": ("oscillation_band_hz", parse_float_pair),
    "oscillation.ratio": ("oscillation_ratio", float),
    "gaps.max_fill_samples": ("max_gap_samples", int),
    "correlation.scope": ("correlation_scope", str),
    "seed": ("seed", int),
}


def load_run_config(path=None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from an optional file plus overrides.

    ``overrides`` use field names and win over file values; ``None`` values
    are ignored.
    """
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        raw = read_kv(path)
        parsed = _apply(path, raw, {k: conv for k, (_, conv) in _RUN_KEYS.items()})
        for key, value in parsed.items():
            name = _RUN_KEYS[key][0]
            if name in _PATH_KEYS:
                value = (path.parent / value) if not Path(value).is_absolute() else Path(value)
            values[name] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path or "<command line>", None, str(exc)) from None


def _iso_date(text: str) -> date:
    return date.fromisoformat(text)


def _hour_groups(text: str) -> tuple[tuple[int, int], ...]:
    return tuple(parse_hours(part.strip()) for part in text.split(",") if part.strip())


_SCENARIO_KEYS: dict[str, Callable[[str], Any]] = {
    "seed": int,
    "start_date": _iso_date,
    "days": int,
    "peak_week_start": _iso_date,
    "critical_region": Region.parse,
    "peak_boost": float,
    "peak_penetration_pct": _optional(float),
    "pmu_start": _optional(_iso_date),
    "pmu_days": int,
    "pmu_rate_hz": int,
    "pmu_coverage": str,
    "group_hours": _hour_groups,
    "trend_mhz": float,
    "dropouts_per_hour": float,
    "max_dropout_samples": int,
    "curtailment_rows_per_day": float,
    "sites": lambda text: tuple(s.strip().upper() for s in text.split(",") if s.strip()),
}
_SITE_FIELDS = {f.name: float for f in dataclasses.fields(SiteParams)}


def load_scenario(path=None, seed: int | None = None) -> SyntheticScenario:
    """Scenario from a file (or the defaults), optionally reseeded.

    Site parameters are set with ``site.<NAME>.<field>`` keys, e.g.
    ``site.NE.tone_hz = 2.5``; ``sites = NE,S`` limits generation to those
    sites.
    """
    kwargs: dict[str, Any] = {}
    sites = default_sites()
    if path is not None:
        path = Path(path)
        raw = read_kv(path)
        site_raw = {k: v for k, v in raw.items() if k.startswith("site.")}
        kwargs = _apply(path, {k: v for k, v in raw.items() if k not in site_raw}, _SCENARIO_KEYS)
        chosen = kwargs.pop("sites", None)
        if chosen is not None:
            unknown = [s for s in chosen if s not in SITE_REGIONS]
            if unknown:
                raise ConfigError(path, raw["sites"][1], f"unknown sites {unknown}")
            sites = {s: p for s, p in sites.items() if s in chosen}
        updates: dict[str, dict[str, float]] = {}
        for key, (text, line) in site_raw.items():
            parts = key.split(".")
            if len(parts) != 3 or parts[1].upper() not in SITE_REGIONS or parts[2] not in _SITE_FIELDS:
                raise ConfigError(path, line, f"unknown key {key!r}")
            try:
                updates.setdefault(parts[1].upper(), {})[parts[2]] = float(text)
            except ValueError:
                raise ConfigError(path, line, f"{key}: not a number: {text!r}") from None
        for site, fields in updates.items():
            base = sites.get(site, SiteParams())
            try:
                sites[site] = dataclasses.replace(base, **fields)
            except ValueError as exc:
                raise ConfigError(path, None, f"site {site}: {exc}") from None
    kwargs["sites"] = sites
    if seed is not None:
        kwargs["seed"] = seed
    try:
        return SyntheticScenario(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path or "<defaults>", None, str(exc)) from None


def write_scenario(scenario: SyntheticScenario, path) -> None:
    """Serialise a scenario in the format :func:`load_scenario` reads."""
    sc = scenario
    lines = [
        f"schema_version = {CONFIG_SCHEMA_VERSION}",
        f"seed = {sc.seed}",
        f"start_date = {sc.start_date.isoformat()}",
        f"days = {sc.days}",
        f"peak_week_start = {sc.peak_week_start.isoformat()}",
        f"critical_region = {sc.critical_region.value}",
        f"peak_boost = {sc.peak_boost!r}",
        f"peak_penetration_pct = {sc.peak_penetration_pct!r}",
        f"pmu_start = {sc.pmu_start.isoformat() if sc.pmu_start else 'none'}",
        f"pmu_days = {sc.pmu_days}",
        f"pmu_rate_hz = {sc.pmu_rate_hz}",
        f"pmu_coverage = {sc.pmu_coverage}",
        "group_hours = " + ",".join(f"{a}-{b}" for a, b in sc.group_hours),
        f"trend_mhz = {sc.trend_mhz!r}",
        f"dropouts_per_hour = {sc.dropouts_per_hour!r}",
        f"max_dropout_samples = {sc.max_dropout_samples}",
        f"curtailment_rows_per_day = {sc.curtailment_rows_per_day!r}",
        "sites = " + ",".join(sc.sites),
    ]
    for site, params in sc.sites.items():
        for name in _SITE_FIELDS:
            lines.append(f"site.{site}.{name} = {getattr(params, name)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_run_config(config: RunConfig, path) -> None:
    """Serialise a run configuration; paths are written as given."""
    inverse = {name: key for key, (name, _) in _RUN_KEYS.items()}
    lines = [f"schema_version = {CONFIG_SCHEMA_VERSION}"]
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if value is None:
            continue
        if isinstance(value, Region):
            text = value.value
        elif f.name in ("group1_hours", "group2_hours"):
            text = f"{value[0]}-{value[1]}"
        elif f.name == "oscillation_band_hz":
            text = f"{value[0]!r},{value[1]!r}"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = str(value)
        lines.append(f"{inverse[f.name]} = {text}")
    Path(path).write_text("\n".join(lines) + "\n")


__all__ = [
    "CONFIG_SCHEMA_VERSION", "ConfigError", "RunConfig", "load_run_config", "load_scenario",
    "parse_hours", "read_kv", "write_run_config", "write_scenario",
]
