from datetime import date
from fractions import Fraction

import numpy as np
import pytest

from ibrfreq.gridmetrics import CurtailmentRecord, CurtailReason, Region, RegionalHourRecord
from ibrfreq.ingest import (
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
from ibrfreq.timeseries import TimeSeries

BALANCE_HEAD = "date,hour,region,hydro_mw,thermal_mw,wind_mw,solar_mw,der_mw,demand_mw\n"
T0 = 1_689_584_400_000


def write(path, text):
    path.write_text(text)
    return path


class TestPmu:
    def test_round_trip_30hz(self, tmp_path):
        x = 60 + np.random.default_rng(0).normal(0, 0.01, 300)
        x[7] = np.nan
        s = TimeSeries(T0, 30, x, name="NE")
        write_pmu_csv(s, tmp_path / "NE.csv")
        back = read_pmu_csv(tmp_path / "NE.csv")
        assert back.sample_rate_hz == 30 and back.start_ms == T0
        assert np.allclose(back.values, x, atol=5e-7, equal_nan=True)
        assert back.gap_mask[7] and back.name == "NE"

    def test_timestamps_round_half_up(self):
        s = TimeSeries(0, 30, np.zeros(4))
        assert grid_timestamps_ms(s).tolist() == [0, 33, 67, 100]

    def test_declared_rate(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n100,60\n200,60\n")
        assert read_pmu_csv(p, 10).sample_rate_hz == 10

    def test_millisecond_rounding_accepted(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n33,60\n67,60\n100,60\n")
        assert read_pmu_csv(p, 30).sample_rate_hz == Fraction(30)
        assert read_pmu_csv(p).sample_rate_hz == Fraction(30)

    def test_tolerance_boundary(self, tmp_path):
        # 34 ms sits 0.667 ms from the 30 Hz grid.
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n34,60\n67,60\n100,60\n")
        with pytest.raises(InputError) as exc:
            read_pmu_csv(p, 30)
        assert exc.value.line == 3

    @pytest.mark.parametrize("rate", [10, 25, 30, 50, 60, 120])
    def test_rate_inferred_from_long_record(self, tmp_path, rate):
        write_pmu_csv(TimeSeries(T0, rate, np.full(1001, 60.0)), tmp_path / "a.csv")
        assert read_pmu_csv(tmp_path / "a.csv").sample_rate_hz == rate

    def test_off_grid_cites_line(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n100,60\n205,60\n300,60\n")
        with pytest.raises(InputError) as exc:
            read_pmu_csv(p, 10)
        assert exc.value.line == 4

    def test_missing_samples_via_empty_and_nan(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n100,\n200,NaN\n300,60\n")
        assert read_pmu_csv(p).gap_mask.tolist() == [False, True, True, False]

    def test_bad_header(self, tmp_path):
        p = write(tmp_path / "a.csv", "time,freq\n0,60\n")
        with pytest.raises(InputError) as exc:
            read_pmu_csv(p)
        assert exc.value.line == 1

    def test_non_numeric_cites_line(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n100,abc\n")
        with pytest.raises(InputError) as exc:
            read_pmu_csv(p)
        assert exc.value.line == 3 and "frequency_hz" in str(exc.value)

    def test_fractional_timestamp(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n100.5,60\n")
        with pytest.raises(InputError, match="integer"):
            read_pmu_csv(p)

    def test_rate_needs_two_rows(self, tmp_path):
        p = write(tmp_path / "a.csv", "timestamp_ms,frequency_hz\n0,60\n")
        with pytest.raises(InputError, match="infer"):
            read_pmu_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            read_pmu_csv(tmp_path / "nope.csv")

    def test_directory_layouts(self, tmp_path):
        s = TimeSeries(T0, 10, np.full(20, 60.0))
        write_pmu_csv(s, tmp_path / "NE.csv")
        write_pmu_csv(s.replace(start_ms=T0 + 10_000), tmp_path / "S" / "b.csv")
        write_pmu_csv(s, tmp_path / "S" / "a.csv")
        out = load_pmu_dir(tmp_path)
        assert list(out) == ["NE", "S"]
        assert [r.start_ms for r in out["S"]] == [T0, T0 + 10_000]
        assert out["S"][0].name == "S"

    def test_empty_directory(self, tmp_path):
        with pytest.raises(InputError):
            load_pmu_dir(tmp_path)


def balance_records():
    return [
        RegionalHourRecord(Region.NE, date(2023, 7, 17), h, 4018.0, 540.0, 10009.0, 728.4, 1092.6, 12117.0)
        for h in range(3)
    ] + [RegionalHourRecord(Region.SE_CW, date(2023, 7, 17), 0, 29192.0, 5256.0, 7.0, 2319.0, 0.0, 41881.0)]


class TestTables:
    def test_balance_round_trip(self, tmp_path):
        recs = balance_records()
        write_balance_csv(recs, tmp_path / "b.csv")
        assert read_balance_csv(tmp_path / "b.csv") == recs

    def test_inertia_round_trip_and_merge(self, tmp_path):
        recs = [r.__class__(**{**r.__dict__, "inertia_mws": 27198.0}) for r in balance_records()]
        write_inertia_csv(recs, tmp_path / "i.csv")
        inertia = read_inertia_csv(tmp_path / "i.csv")
        merged = merge_inertia(balance_records(), inertia)
        assert [r.inertia_mws for r in merged] == [27198.0] * 4

    def test_partial_inertia_leaves_none(self):
        recs = balance_records()
        merged = merge_inertia(recs, {(recs[0].date, 0, Region.NE): 1.0})
        assert [r.inertia_mws for r in merged] == [1.0, None, None, None]

    def test_curtailment_round_trip(self, tmp_path):
        recs = [
            CurtailmentRecord(Region.NE, date(2023, 1, 2), 9, 12.5, reason) for reason in CurtailReason
        ]
        write_curtailment_csv(recs, tmp_path / "c.csv")
        assert read_curtailment_csv(tmp_path / "c.csv") == recs

    def test_combined_solar_without_der(self, tmp_path):
        p = write(
            tmp_path / "b.csv",
            "date,hour,region,hydro_mw,thermal_mw,wind_mw,solar_mw,demand_mw\n2023-01-01,0,NE,1,1,1,5,10\n",
        )
        rec = read_balance_csv(p, combined_solar=True)[0]
        assert rec.solar_mw == 5.0 and rec.der_mw == 0.0
        with pytest.raises(InputError):
            read_balance_csv(p)

    @pytest.mark.parametrize(
        "row, fragment",
        [
            ("2023-13-01,0,NE,1,1,1,1,1,1", "bad date"),
            ("2023-01-01,24,NE,1,1,1,1,1,1", "outside 0-23"),
            ("2023-01-01,0,XX,1,1,1,1,1,1", "XX"),
            ("2023-01-01,0,NE,1,1,-1,1,1,1", "wind_mw"),
            ("2023-01-01,0,NE,1,1,x,1,1,1", "not a number"),
            ("2023-01-01,0,NE,1,1,1,1,1", "fields"),
        ],
    )
    def test_balance_errors_cite_line(self, tmp_path, row, fragment):
        p = write(tmp_path / "b.csv", BALANCE_HEAD + "2023-01-01,1,NE,1,1,1,1,1,1\n" + row + "\n")
        with pytest.raises(InputError, match=fragment) as exc:
            read_balance_csv(p)
        assert exc.value.line == 3 and f"{p}:3" in str(exc.value)

    def test_duplicate_key(self, tmp_path):
        row = "2023-01-01,1,NE,1,1,1,1,1,1\n"
        with pytest.raises(InputError, match="duplicate") as exc:
            read_balance_csv(write(tmp_path / "b.csv", BALANCE_HEAD + row + row))
        assert exc.value.line == 3

    def test_tampered_header(self, tmp_path):
        p = write(tmp_path / "b.csv", BALANCE_HEAD.replace("wind_mw", "wind") + "2023-01-01,1,NE,1,1,1,1,1,1\n")
        with pytest.raises(InputError) as exc:
            read_balance_csv(p)
        assert exc.value.line == 1

    def test_unknown_reason(self, tmp_path):
        p = write(
            tmp_path / "c.csv",
            "date,hour,region,curtailed_wind_mw,reason\n2023-01-01,9,NE,3,weather\n",
        )
        with pytest.raises(InputError, match="unknown reason") as exc:
            read_curtailment_csv(p)
        assert exc.value.line == 2

    def test_blank_lines_skipped(self, tmp_path):
        p = write(tmp_path / "b.csv", BALANCE_HEAD + "\n2023-01-01,1,NE,1,1,1,1,1,1\n\n")
        assert len(read_balance_csv(p)) == 1
