"""One-port SAW resonator toolkit.

Touchstone I/O, mBVD equivalent-circuit modeling and fitting, reflection
metric extraction (resonances, coupling, Bode-Q, figure of merit) and
dispersion-table frequency scaling.
"""

__version__ = "0.1.0"

from .design import (
    DeviceGeometry,
    DispersionAnchor,
    DispersionTable,
    Prediction,
    SweepRow,
    builtin_dispersion_table,
    geometry_from_json,
    geometry_to_json,
    load_dispersion_csv,
    predict_fs,
    predict_keff2,
    scale_to_frequency,
    sweep,
)
from .extract import (
    AdmittanceRatio,
    ExtractOptions,
    ExtractionReport,
    QTrace,
    admittance_ratio,
    bode_q,
    find_fs_fp,
    fom,
    full_extraction,
    keff2,
    q_max,
    report_csv_row,
    report_to_json,
)
from .fit import FitConfig, FitResult, fit_mbvd, initial_guess, result_to_json
from .mbvd import (
    MbvdParams,
    admittance,
    derived_fp,
    derived_fs,
    derived_keff2,
    derived_q_m,
    params_from_json,
    params_from_metrics,
    params_to_json,
    synthesize_s11,
)
from .network import (
    AdmittanceTrace,
    SmithCircle,
    fit_smith_circle,
    renormalize,
    s_to_y,
    tune_source_impedance,
    y_to_s,
)
from .touchstone import OnePortTrace, TouchstoneFormat, parse_touchstone, write_touchstone

__all__ = [
    "AdmittanceRatio",
    "AdmittanceTrace",
    "DeviceGeometry",
    "DispersionAnchor",
    "DispersionTable",
    "ExtractOptions",
    "ExtractionReport",
    "FitConfig",
    "FitResult",
    "MbvdParams",
    "OnePortTrace",
    "Prediction",
    "QTrace",
    "SmithCircle",
    "SweepRow",
    "TouchstoneFormat",
    "admittance",
    "admittance_ratio",
    "bode_q",
    "builtin_dispersion_table",
    "derived_fp",
    "derived_fs",
    "derived_keff2",
    "derived_q_m",
    "find_fs_fp",
    "fit_mbvd",
    "fit_smith_circle",
    "fom",
    "full_extraction",
    "geometry_from_json",
    "geometry_to_json",
    "initial_guess",
    "keff2",
    "load_dispersion_csv",
    "params_from_json",
    "params_from_metrics",
    "params_to_json",
    "parse_touchstone",
    "predict_fs",
    "predict_keff2",
    "q_max",
    "renormalize",
    "report_csv_row",
    "report_to_json",
    "result_to_json",
    "s_to_y",
    "scale_to_frequency",
    "sweep",
    "synthesize_s11",
    "tune_source_impedance",
    "write_touchstone",
    "y_to_s",
]
