"""Resonator metrics from a one-port trace.

Locates the series/parallel resonance pair on the admittance magnitude,
computes the effective coupling from the frequency spread, the series-to-
parallel admittance ratio, and a reflection-derived quality factor
Q(w) = w |dS11/dw| / (1 - |S11|^2) evaluated after centering the Smith
locus with a tuned source impedance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import savgol_filter

from .errors import DomainError, EmptyBand, ResonanceNotBracketed, TooFewPoints
from .network import AdmittanceTrace, s_to_y, tune_source_impedance
from .touchstone import OnePortTrace

# samples where 1 - |S11|^2 falls below this are flagged, not evaluated
Q_FLAG_EPS = 1e-6

CSV_HEADER = "device,lambda_nm,f_s_GHz,keff2_pct,q_max,fom"


class AdmittanceRatio(NamedTuple):
    linear: float
    db: float


@dataclass(frozen=True)
class QTrace:
    """Bode-Q samples; flagged holds frequencies where the formula is singular."""

    frequencies: np.ndarray
    q: np.ndarray
    flagged: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if freqs.shape != q.shape:
            raise ValueError("frequencies and q must have the same length")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "flagged", np.asarray(self.flagged, dtype=float))


@dataclass(frozen=True)
class ExtractionReport:
    f_s: float
    f_p: float
    keff2: float
    y_ratio: float
    y_ratio_db: float
    q_bode: QTrace
    q_max: float
    fom: float
    z0_star: float


@dataclass(frozen=True)
class ExtractOptions:
    """Band overrides in Hz; None means derive the band from (f_s, f_p)."""

    tune_band: tuple[float, float] | None = None
    qmax_band: tuple[float, float] | None = None
    z0_min: float = 1.0
    z0_max: float = 5000.0
    smooth_window: int | None = None


def _parabolic_refine(x: np.ndarray, v: np.ndarray, i: int) -> float:
    """Vertex of the parabola through samples i-1, i, i+1, clamped to that window."""
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    d0 = (v[i] - v[i - 1]) / (x1 - x0)
    d1 = (v[i + 1] - v[i]) / (x2 - x1)
    curvature = (d1 - d0) / (x2 - x0)
    if curvature == 0.0:
        return float(x1)
    vertex = 0.5 * (x0 + x1) - d0 / (2.0 * curvature)
    return float(min(max(vertex, x0), x2))


def find_fs_fp(trace: AdmittanceTrace) -> tuple[float, float]:
    """Series and parallel resonance from the |Y| extrema.

    The grid extrema are refined by 3-point parabolic interpolation of
    log|Y|.  Raises ResonanceNotBracketed when either extremum sits on a
    grid endpoint.
    """
    magnitude = np.abs(trace.y)
    log_mag = np.log(np.maximum(magnitude, 1e-300))
    i_s = int(np.argmax(magnitude))
    if i_s == 0 or i_s == magnitude.size - 1:
        raise ResonanceNotBracketed(
            "resonance not bracketed: |Y| maximum sits at a grid endpoint"
        )
    i_p = i_s + 1 + int(np.argmin(magnitude[i_s + 1 :]))
    if i_p == magnitude.size - 1:
        raise ResonanceNotBracketed(
            "resonance not bracketed: no interior |Y| minimum above the series peak"
        )
    f_s = _parabolic_refine(trace.frequencies, log_mag, i_s)
    f_p = _parabolic_refine(trace.frequencies, log_mag, i_p)
    return f_s, f_p


def keff2(f_s: float, f_p: float) -> float:
    """Effective coupling (pi^2/8) (f_p^2 - f_s^2) / f_s^2 as a fraction."""
    if not f_s > 0:
        raise DomainError("f_s must be positive")
    if f_p < f_s:
        raise DomainError(f"f_p ({f_p:g} Hz) must not be below f_s ({f_s:g} Hz)")
    return float(np.pi**2 / 8.0 * (f_p**2 - f_s**2) / f_s**2)


def admittance_ratio(trace: AdmittanceTrace, f_s: float, f_p: float) -> AdmittanceRatio:
    """|Y(f_s)| / |Y(f_p)| at the nearest grid samples, linear and in dB."""
    freqs = trace.frequencies
    for value, name in ((f_s, "f_s"), (f_p, "f_p")):
        if not freqs[0] <= value <= freqs[-1]:
            raise DomainError(f"{name} = {value:g} Hz lies outside the trace span")
    i_s = int(np.argmin(np.abs(freqs - f_s)))
    i_p = int(np.argmin(np.abs(freqs - f_p)))
    ratio = float(np.abs(trace.y[i_s]) / np.abs(trace.y[i_p]))
    return AdmittanceRatio(linear=ratio, db=float(20.0 * np.log10(ratio)))


def bode_q(trace: OnePortTrace, smooth_window: int | None = None) -> QTrace:
    """Reflection-derived Q(w) = w |dS11/dw| / (1 - |S11|^2).

    Central differences on the (possibly non-uniform) angular-frequency
    grid, one-sided at the endpoints.  Samples too close to |S11| = 1 are
    returned in .flagged instead of producing huge values.  Optional
    odd-length Savitzky-Golay smoothing of S11 assumes near-uniform spacing.
    """
    if trace.frequencies.size < 3:
        raise TooFewPoints("need at least 3 samples to differentiate S11")
    s = trace.s11
    if smooth_window is not None:
        if smooth_window % 2 == 0 or smooth_window < 5:
            raise ValueError("smooth_window must be odd and >= 5")
        if smooth_window > s.size:
            raise ValueError("smooth_window exceeds the trace length")
        s = savgol_filter(s.real, smooth_window, 3) + 1j * savgol_filter(
            s.imag, smooth_window, 3
        )
    omega = 2.0 * np.pi * trace.frequencies
    denominator = 1.0 - np.abs(s) ** 2
    derivative = np.gradient(s, omega)
    ok = denominator >= Q_FLAG_EPS
    q = omega[ok] * np.abs(derivative[ok]) / denominator[ok]
    return QTrace(trace.frequencies[ok], q, trace.frequencies[~ok])


def q_max(q_trace: QTrace, band: tuple[float, float]) -> float:
    """Highest unflagged Bode-Q inside the band."""
    lo, hi = band
    mask = (q_trace.frequencies >= lo) & (q_trace.frequencies <= hi)
    if not np.any(mask):
        raise EmptyBand(f"no unflagged Bode-Q samples in [{lo:g}, {hi:g}] Hz")
    return float(np.max(q_trace.q[mask]))


def fom(keff2: float, q_max: float) -> float:
    """Figure of merit keff2 * q_max."""
    if keff2 < 0 or q_max < 0:
        raise DomainError("fom arguments must be non-negative")
    return float(keff2 * q_max)


def full_extraction(
    trace: OnePortTrace, options: ExtractOptions | None = None
) -> ExtractionReport:
    """Run the whole metric pipeline on a measured or synthesized trace.

    Defaults: source-impedance tuning over [0.98 f_s, 1.02 f_p], Q search
    over [0.9 f_s, 1.1 f_p].
    """
    opts = options or ExtractOptions()
    y = s_to_y(trace)
    f_s, f_p = find_fs_fp(y)
    coupling = keff2(f_s, f_p)
    ratio = admittance_ratio(y, f_s, f_p)
    tune_band = opts.tune_band or (0.98 * f_s, 1.02 * f_p)
    z0_star, tuned = tune_source_impedance(trace, tune_band, opts.z0_min, opts.z0_max)
    q_trace = bode_q(tuned, opts.smooth_window)
    search_band = opts.qmax_band or (0.9 * f_s, 1.1 * f_p)
    best_q = q_max(q_trace, search_band)
    return ExtractionReport(
        f_s=f_s,
        f_p=f_p,
        keff2=coupling,
        y_ratio=ratio.linear,
        y_ratio_db=ratio.db,
        q_bode=q_trace,
        q_max=best_q,
        fom=coupling * best_q,
        z0_star=z0_star,
    )


def _format_number(x: float) -> str:
    return f"{x:.6g}"


def report_to_json(
    report: ExtractionReport,
    device: str | None = None,
    lambda_nm: float | None = None,
) -> dict:
    """JSON-ready dict with SI units; q_bode carried as parallel arrays."""
    return {
        "schema_version": 1,
        "device": device,
        "lambda_nm": lambda_nm,
        "f_s_hz": report.f_s,
        "f_p_hz": report.f_p,
        "keff2": report.keff2,
        "y_ratio": report.y_ratio,
        "y_ratio_db": report.y_ratio_db,
        "q_max": report.q_max,
        "fom": report.fom,
        "z0_star_ohm": report.z0_star,
        "q_bode": {
            "frequency_hz": report.q_bode.frequencies.tolist(),
            "q": report.q_bode.q.tolist(),
            "flagged_hz": report.q_bode.flagged.tolist(),
        },
    }


def report_csv_row(
    report: ExtractionReport,
    device: str = "",
    lambda_nm: float | None = None,
) -> str:
    """One CSV row matching CSV_HEADER; GHz and percent, 6 significant digits."""
    fields = [
        device,
        "" if lambda_nm is None else _format_number(lambda_nm),
        _format_number(report.f_s / 1e9),
        _format_number(report.keff2 * 100.0),
        _format_number(report.q_max),
        _format_number(report.fom),
    ]
    return ",".join(fields)
