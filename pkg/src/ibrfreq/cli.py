"""
Command-line front end.

Exit codes: 0 success, 2 input or configuration error, 3 non-convergence
under ``--strict``, 4 ingest failure in ``framework``, 5 decomposition
failure, 6 statistics failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from . import __version__, stats
from .config import (
    ConfigError,
    RunConfig,
    load_run_config,
    load_scenario,
    parse_float_pair,
    parse_hours,
    write_run_config,
    write_scenario,
)
from .gridmetrics import (
    RAMP_HORIZONS_H,
    REGION_ORDER,
    Region,
    curtailment_breakdown,
    hourly_curtailment_profile,
    ibr_penetration,
    net_load,
    ramp_histogram,
    ramps_by_horizon,
    system_aggregate,
)
from .ingest import (
    InputError,
    grid_timestamps_ms,
    load_pmu_dir,
    merge_inertia,
    read_balance_csv,
    read_curtailment_csv,
    read_inertia_csv,
    read_pmu_csv,
    write_balance_csv,
    write_curtailment_csv,
    write_inertia_csv,
    write_pmu_csv,
)
from .pipeline import StageError, evaluate_framework, select_critical_week
from .synthetic import generate_synthetic
from .timeseries import SamplingSpec, decimate, fill_gaps, segments
from .vmd import VmdConfig, split_qss_dynamic, vmd_decompose

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_INGEST = 4
EXIT_VMD = 5
EXIT_STATS = 6
SCHEMA_VERSION = 1

STAGE_EXIT = {"penetration": EXIT_INGEST, "critical_week": EXIT_INGEST, "vmd": EXIT_VMD, "stats": EXIT_STATS}

log = logging.getLogger("ibrfreq")


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        self.code = code
        super().__init__(message)


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out) if args.out is not None else cfg.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _parse_horizons(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"horizons must be integers like 1,3,5, got {text!r}") from None
    if not values or any(h < 1 for h in values):
        raise argparse.ArgumentTypeError("horizons must be integers >= 1")
    return values


def _parse_hours(text: str) -> tuple[int, int]:
    try:
        return parse_hours(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _config(args, **overrides) -> RunConfig:
    return load_run_config(getattr(args, "config", None), {"seed": args.seed, **overrides})


def _balance(args, cfg: RunConfig, require_demand: bool = False):
    path = args.balance if getattr(args, "balance", None) else cfg.balance
    if path is None:
        raise CliError(EXIT_INPUT, "no balance file given (--balance or 'balance' in the config)")
    records = read_balance_csv(path, cfg.combined_solar)
    if require_demand:
        for i, r in enumerate(records):
            if r.demand_mw == 0:
                raise InputError(path, _line_of(path, i), f"demand_mw is 0 for {r.region.value} {r.date} hour {r.hour}")
    return records


def _line_of(path, index: int) -> int:
    # Line number of the index-th data row, skipping blank lines.
    count = -1
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no == 1 or not line.strip().strip(","):
                continue
            count += 1
            if count == index:
                return line_no
    return index + 2


# -- decompose ---------------------------------------------------------------------------


def cmd_decompose(args) -> int:
    cfg = _config(
        args, vmd_modes=args.modes, vmd_alpha=args.alpha, vmd_tau=args.tau, vmd_tol=args.tol,
        vmd_max_iters=args.max_iters, vmd_init=args.init_scheme, pmu_rate_hz=args.rate,
    )
    vmd_cfg = cfg.vmd_config()
    series = read_pmu_csv(args.input, cfg.pmu_rate_hz)
    if series.has_gaps:
        series = fill_gaps(series, cfg.max_gap_samples)
        if series.has_gaps:
            a, b, why = series.meta["unfilled_runs"][0]
            raise InputError(args.input, a + 2, f"gap of {b - a} samples cannot be filled ({why})")
    result = vmd_decompose(series, vmd_cfg)
    out = _out_dir(args, cfg)
    cols = {"timestamp_ms": grid_timestamps_ms(series)}
    for i, m in enumerate(result.modes):
        cols[f"mode{i}"] = m.values
    cols["residual"] = result.residual.values
    pd.DataFrame(cols).to_csv(out / "modes.csv", index=False, float_format="%.9f", lineterminator="\n")
    _write_json(
        out / "centers.json",
        {
            "center_freqs_hz": [float(f) for f in result.center_freqs_hz],
            "iterations": result.iterations,
            "converged": result.converged,
            "final_delta": result.final_delta if np.isfinite(result.final_delta) else None,
            "config": {
                "n_modes": vmd_cfg.n_modes, "alpha": vmd_cfg.alpha, "tau": vmd_cfg.tau,
                "tol": vmd_cfg.tol, "max_iters": vmd_cfg.max_iters, "init": vmd_cfg.init, "seed": vmd_cfg.seed,
            },
            "sample_rate_hz": series.rate,
            "n_samples": len(series),
        },
    )
    centers = ", ".join(f"{f:.4f}" for f in result.center_freqs_hz)
    _say(args, f"decompose: {result.n_modes} modes at [{centers}] Hz after {result.iterations} iterations"
         f"{'' if result.converged else ' (not converged)'}")
    if args.strict and not result.converged:
        log.error("not converged after %d iterations (delta %.3g)", result.iterations, result.final_delta)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# -- tabular commands --------------------------------------------------------------------


def cmd_penetration(args) -> int:
    cfg = _config(args)
    records = _balance(args, cfg, require_demand=True)
    out = _out_dir(args, cfg)
    rows = [(r.date.isoformat(), r.hour, r.region.value, repr(ibr_penetration(r))) for r in records]
    _write_rows(out / "penetration.csv", ("date", "hour", "region", "penetration_pct"), rows)
    _say(args, f"penetration: {len(rows)} region-hours -> {out / 'penetration.csv'}")
    return EXIT_OK


def cmd_netload(args) -> int:
    cfg = _config(args)
    records = _balance(args, cfg)
    out = _out_dir(args, cfg)
    rows = [(r.date.isoformat(), r.hour, r.region.value, repr(net_load(r))) for r in records]
    rows += [(s.date.isoformat(), s.hour, "SYSTEM", repr(net_load(s))) for s in system_aggregate(records)]
    _write_rows(out / "netload.csv", ("date", "hour", "region", "net_load_mw"), rows)
    _say(args, f"netload: {len(rows)} rows -> {out / 'netload.csv'}")
    return EXIT_OK


def cmd_ramps(args) -> int:
    cfg = _config(args, ramp_bin_mw=args.bin_mw)
    records = _balance(args, cfg)
    out = _out_dir(args, cfg)
    series = {region.value: [r for r in records if r.region is region] for region in REGION_ORDER}
    series["SYSTEM"] = system_aggregate(records)
    ramp_rows, hist_rows = [], []
    for name, recs in series.items():
        if not recs:
            continue
        for h, rs in ramps_by_horizon(recs, args.horizons).items():
            for start, ramp in zip(rs.starts, rs.ramps_mw):
                ramp_rows.append((name, h, start.date().isoformat(), start.hour, repr(float(ramp))))
            if rs.ramps_mw.size:
                hist = ramp_histogram(rs.ramps_mw, cfg.ramp_bin_mw)
                for a, b, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
                    hist_rows.append((name, h, repr(float(a)), repr(float(b)), int(c)))
    _write_rows(out / "ramps.csv", ("region", "horizon_h", "start_date", "start_hour", "ramp_mw"), ramp_rows)
    _write_rows(out / "ramp_histograms.csv", ("region", "horizon_h", "bin_lo_mw", "bin_hi_mw", "count"), hist_rows)
    _say(args, f"ramps: horizons {','.join(map(str, args.horizons))} h, {len(ramp_rows)} ramps -> {out / 'ramps.csv'}")
    return EXIT_OK


def cmd_curtailment(args) -> int:
    cfg = _config(args)
    path = args.curtailment or cfg.curtailment
    if path is None:
        raise CliError(EXIT_INPUT, "no curtailment file given (--curtailment or 'curtailment' in the config)")
    rows = read_curtailment_csv(path)
    out = _out_dir(args, cfg)
    br = curtailment_breakdown(rows, args.hours)
    _write_rows(
        out / "curtailment_reasons.csv",
        ("reason", "label", "count", "percentage", "curtailed_mw"),
        [(r.value, r.label, br.counts[r], repr(br.percentages[r]), repr(br.curtailed_mw[r])) for r in br.counts],
    )
    profile = hourly_curtailment_profile(rows)
    _write_rows(out / "curtailment_hourly.csv", ("hour", "curtailed_mw"), [(h, repr(float(v))) for h, v in enumerate(profile)])
    shares = ", ".join(f"{r.value} {br.percentages[r]:.2f}%" for r in br.counts)
    _say(args, f"curtailment: {br.total} rows in hours {args.hours[0]}-{args.hours[1]}: {shares}")
    return EXIT_OK


def cmd_critical_week(args) -> int:
    cfg = _config(args, region=args.region)
    records = _balance(args, cfg, require_demand=True)
    week = select_critical_week(records, cfg.region)
    out = _out_dir(args, cfg)
    _write_json(out / "critical_week.json", week.to_dict())
    _say(args, f"critical-week: {week.region.value} {week.start_date}..{week.end_date} "
         f"mean penetration {week.mean_penetration_pct:.2f}%")
    return EXIT_OK


# -- stats -------------------------------------------------------------------------------


def cmd_stats(args) -> int:
    cfg = _config(
        args, pmu_rate_hz=args.rate, hist_bin_hz=args.bin_hz, acf_max_lag=args.max_lag,
        decimate_hz=args.decimate, vmd_modes=args.modes, vmd_alpha=args.alpha,
    )
    series = read_pmu_csv(args.input, cfg.pmu_rate_hz)
    series = fill_gaps(series, cfg.max_gap_samples)
    if cfg.decimate_hz is not None or args.dynamic:
        pieces = segments(series)
        if not pieces:
            raise InputError(args.input, None, "no valid samples")
        if len(pieces) > 1:
            log.warning("unfillable gaps: using the longest of %d gap-free segments", len(pieces))
        series = max(pieces, key=len)
    if cfg.decimate_hz is not None:
        series = decimate(series, SamplingSpec(cfg.decimate_hz))
    source = Path(args.input).name
    if args.dynamic:
        series = split_qss_dynamic(series, cfg.vmd_config()).dynamic
        source += ":dynamic"
    out = _out_dir(args, cfg)
    window = (float(series.start_ms), float(series.end_ms))
    try:
        hist = stats.histogram(series, cfg.hist_bin_hz)
        reports = [
            stats.StatReport("std_dev_hz", stats.std_dev(series), window, source),
            stats.StatReport("n_samples", float(hist.n_samples), window, source),
        ]
        if np.isfinite(hist.skewness):
            reports.append(stats.StatReport("skewness", hist.skewness, window, source))
        pieces = segments(series) if series.has_gaps else [series]
        longest = max(pieces, key=len)
        r = stats.acf(longest, cfg.acf_max_lag)
        spec = stats.spectrum_peaks(longest, args.min_prominence, args.band)
    except ValueError as exc:
        raise CliError(EXIT_STATS, str(exc)) from exc
    h = hist.histogram
    _write_rows(out / "histogram.csv", ("bin_lo_hz", "bin_hi_hz", "count"),
                [(repr(float(a)), repr(float(b)), int(c)) for a, b, c in zip(h.edges[:-1], h.edges[1:], h.counts)])
    _write_rows(out / "acf.csv", ("lag", "r"), [(k, repr(float(v))) for k, v in enumerate(r)])
    _write_rows(out / "spectrum.csv", ("freq_hz", "amplitude_hz"),
                [(repr(float(f)), repr(float(a))) for f, a in zip(spec.freqs_hz, spec.amplitude)])
    _write_json(
        out / "stats.json",
        {
            "reports": [rep.to_dict() for rep in reports],
            "spectrum": {
                "resolution_hz": spec.resolution_hz,
                "peaks": [{"freq_hz": p.freq_hz, "amplitude": p.amplitude, "prominence": p.prominence}
                          for p in spec.peaks[: args.top]],
            },
        },
    )
    top = f", top peak {spec.peaks[0].freq_hz:.3f} Hz" if spec.peaks else ""
    _say(args, f"stats: std {reports[0].value:.6g} Hz, skewness {hist.skewness:.4g}{top}")
    return EXIT_OK


# -- framework ---------------------------------------------------------------------------


def cmd_framework(args) -> int:
    overrides = {k: getattr(args, k) for k in ("pmu", "balance", "inertia", "region")}
    cfg = _config(args, **overrides)
    missing = cfg.missing_paths(["pmu", "balance"])
    if missing:
        raise CliError(EXIT_INPUT, "missing inputs: " + "; ".join(missing))
    if cfg.inertia is not None and cfg.missing_paths(["inertia"]):
        raise CliError(EXIT_INPUT, "missing inputs: " + "; ".join(cfg.missing_paths(["inertia"])))
    try:
        records = read_balance_csv(cfg.balance, cfg.combined_solar)
        if cfg.inertia is not None:
            records = merge_inertia(records, read_inertia_csv(cfg.inertia))
        pmu = load_pmu_dir(cfg.pmu, cfg.pmu_rate_hz)
    except InputError as exc:
        raise CliError(EXIT_INGEST, f"[ingest] {exc}") from exc
    _say(args, f"ingest: {len(records)} balance rows, PMU sites {', '.join(pmu)}")
    if cfg.inertia is None:
        log.warning("no inertia file configured: correlation section will omit r_inertia")
    try:
        report = evaluate_framework(records, pmu, cfg.framework_settings())
    except StageError as exc:
        raise CliError(STAGE_EXIT.get(exc.stage, EXIT_STATS), str(exc)) from exc
    for line in report.stage_summaries:
        _say(args, line)
    out = _out_dir(args, cfg)
    path = report.write(out)
    _say(args, f"report: {path}")
    return EXIT_OK


# -- synth -------------------------------------------------------------------------------


def cmd_synth(args) -> int:
    try:
        scenario = load_scenario(args.scenario, args.seed)
    except ConfigError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    out = Path(args.out) if args.out is not None else Path("synthetic")
    out.mkdir(parents=True, exist_ok=True)
    data = generate_synthetic(scenario)
    write_balance_csv(data.records, out / "balance.csv")
    write_inertia_csv(data.records, out / "inertia.csv")
    write_curtailment_csv(data.curtailment, out / "curtailment.csv")
    pmu_dir = out / "pmu"
    n_files = 0
    for site, pieces in data.pmu.items():
        site_dir = pmu_dir / site
        site_dir.mkdir(parents=True, exist_ok=True)
        for stale in site_dir.glob("*.csv"):
            stale.unlink()
        for piece in pieces:
            t = datetime(1970, 1, 1) + timedelta(milliseconds=float(piece.start_ms))
            write_pmu_csv(piece, site_dir / f"{t:%Y-%m-%d_%H%M}.csv")
            n_files += 1
    write_scenario(scenario, out / "scenario.cfg")
    run_cfg = RunConfig(
        pmu=Path("pmu"), balance=Path("balance.csv"), inertia=Path("inertia.csv"),
        curtailment=Path("curtailment.csv"), out=Path("report"),
        pmu_rate_hz=float(scenario.pmu_rate_hz), region=scenario.critical_region,
        group1_hours=scenario.group_hours[0] if len(scenario.group_hours) > 0 else (9, 12),
        group2_hours=scenario.group_hours[1] if len(scenario.group_hours) > 1 else (21, 24),
        seed=scenario.seed,
    )
    write_run_config(run_cfg, out / "run.cfg")
    _say(args, f"synth: {len(data.records)} balance rows, {len(data.curtailment)} curtailment rows, "
         f"{n_files} PMU files -> {out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--config", default=d(None), help="flat key=value run configuration file")
    parser.add_argument("--out", default=d(None), help="output directory")
    parser.add_argument("--seed", type=int, default=d(None), help="random seed override")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="suppress progress lines")


def _vmd_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--modes", type=int, help="number of modes (default 3)")
    p.add_argument("--alpha", type=float, help="bandwidth penalty (default 2000)")
    p.add_argument("--tau", type=float, help="dual ascent step (default 0)")
    p.add_argument("--tol", type=float, help="convergence tolerance (default 1e-7)")
    p.add_argument("--max-iters", type=int, help="iteration budget (default 500)")
    p.add_argument("--init", dest="init_scheme", help="uniform, zero or random[:SEED]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ibrfreq", description="Regional frequency dynamics under high IBR penetration."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(func=func)
        return p

    p = add("decompose", cmd_decompose, "split a PMU frequency CSV into band-limited modes")
    p.add_argument("input", help="PMU CSV (timestamp_ms,frequency_hz)")
    _vmd_flags(p)
    p.add_argument("--rate", type=float, help="declared sample rate in Hz (inferred if omitted)")
    p.add_argument("--strict", action="store_true", help="exit 3 when the solver does not converge")

    for name, func, what in (
        ("penetration", cmd_penetration, "hourly IBR penetration per region"),
        ("netload", cmd_netload, "hourly net load per region and system-wide"),
    ):
        p = add(name, func, what)
        p.add_argument("--balance", help="balance CSV")

    p = add("ramps", cmd_ramps, "net-load ramps over several horizons")
    p.add_argument("--balance", help="balance CSV")
    p.add_argument("--horizons", type=_parse_horizons, default=RAMP_HORIZONS_H,
                   help="comma-separated horizons in hours (default 1,3,5,7,12)")
    p.add_argument("--bin-mw", type=float, help="ramp histogram bin width in MW (default 100)")

    p = add("curtailment", cmd_curtailment, "curtailment reasons and hourly profile")
    p.add_argument("--curtailment", help="curtailment CSV")
    p.add_argument("--hours", type=_parse_hours, default=(8, 11), help="hour-of-day range, e.g. 8-11 (default)")

    p = add("stats", cmd_stats, "spread, histogram, autocorrelation and spectrum of one PMU series")
    p.add_argument("input", help="PMU CSV")
    p.add_argument("--rate", type=float, help="declared sample rate in Hz")
    p.add_argument("--decimate", type=float, help="reduce to this rate first (integer factor)")
    p.add_argument("--dynamic", action="store_true", help="analyse the dynamic component instead of the raw signal")
    p.add_argument("--modes", type=int, help="modes for --dynamic")
    p.add_argument("--alpha", type=float, help="bandwidth penalty for --dynamic")
    p.add_argument("--bin-hz", type=float, help="histogram bin width (default 0.001)")
    p.add_argument("--max-lag", type=int, help="largest autocorrelation lag in samples (default 30)")
    p.add_argument("--min-prominence", type=float, default=0.0, help="spectral peak prominence threshold")
    p.add_argument("--band", type=_parse_band, help="restrict peak search to LO,HI Hz")
    p.add_argument("--top", type=int, default=10, help="number of peaks to report")

    p = add("critical-week", cmd_critical_week, "7-day window with the highest mean penetration")
    p.add_argument("--balance", help="balance CSV")
    p.add_argument("--region", type=Region.parse, help="region (default NE)")

    p = add("framework", cmd_framework, "run the full regional evaluation and write a report")
    p.add_argument("--pmu", help="PMU directory")
    p.add_argument("--balance", help="balance CSV")
    p.add_argument("--inertia", help="inertia CSV (optional)")
    p.add_argument("--region", type=Region.parse, help="region for the critical week (default NE)")

    p = add("synth", cmd_synth, "generate a consistent synthetic input set")
    p.add_argument("--scenario", help="scenario file (flat key=value)")
    return parser


def _parse_band(text: str) -> tuple[float, float]:
    try:
        return parse_float_pair(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _split_init(args) -> None:
    if getattr(args, "init_scheme", None):
        scheme, seed = VmdConfig.parse_init(args.init_scheme)
        args.init_scheme = scheme
        if seed is not None and args.seed is None:
            args.seed = seed


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    _split_init(args)
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except (InputError, ConfigError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
