"""Measurement-based analysis of regional frequency dynamics under high IBR penetration."""

from .gridmetrics import (
    CurtailmentRecord,
    CurtailReason,
    Region,
    RegionalHourRecord,
    coi_frequency,
    curtailment_breakdown,
    ibr_penetration,
    net_load,
    net_load_ramps,
)
from .pipeline import (
    CriticalWeek,
    FrameworkReport,
    FrameworkSettings,
    GroupDataset,
    evaluate_framework,
    form_groups,
    select_critical_week,
)
from .stats import StatReport, SpectrumPeak, acf, histogram, pearson, skewness, spectrum_peaks, std_dev
from .synthetic import SiteParams, SyntheticScenario, generate_synthetic
from .timeseries import TimeSeries, decimate, fill_gaps, slice_window
from .vmd import DecompositionSplit, VmdConfig, VmdResult, split_qss_dynamic, vmd_decompose

__version__ = "0.1.0"

__all__ = [
    "CriticalWeek", "CurtailReason", "CurtailmentRecord", "DecompositionSplit", "FrameworkReport",
    "FrameworkSettings", "GroupDataset", "Region", "RegionalHourRecord", "SiteParams", "SpectrumPeak",
    "StatReport", "SyntheticScenario", "TimeSeries", "VmdConfig", "VmdResult", "acf", "coi_frequency",
    "curtailment_breakdown", "decimate", "evaluate_framework", "fill_gaps", "form_groups",
    "generate_synthetic", "histogram", "ibr_penetration", "net_load", "net_load_ramps", "pearson",
    "select_critical_week", "skewness", "slice_window", "spectrum_peaks", "split_qss_dynamic",
    "std_dev", "vmd_decompose",
]
