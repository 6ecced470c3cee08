"""One-port network transforms.

S11 <-> admittance conversion, reference-impedance renormalization,
algebraic Smith-chart circle fitting, and the source-impedance search that
centers the reflection locus at the chart origin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLocus, SingularReflection, TooFewPoints
from .touchstone import OnePortTrace, _as_frequency_grid

# Re(Y) below -1e-6 S on a supposedly passive trace draws a warning
_PASSIVITY_EPS = 1e-6
# |1 + S11| below this makes the admittance transform singular
_SINGULAR_EPS = 1e-12
_COLLINEAR_TOL = 1e-12
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AdmittanceTrace:
    """Sampled complex admittance in siemens on a Hz frequency grid."""

    frequencies: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        freqs = _as_frequency_grid(self.frequencies)
        y = np.asarray(self.y, dtype=complex)
        if y.shape != freqs.shape:
            raise ValueError("frequencies and y must have the same length")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SmithCircle:
    center: complex
    radius: float
    rms_residual: float


def s_to_y(trace: OnePortTrace) -> AdmittanceTrace:
    """Y = (1 - S11) / (z0 (1 + S11)).  Raises SingularReflection near S11 = -1."""
    denom = 1.0 + trace.s11
    if np.any(np.abs(denom) < _SINGULAR_EPS):
        raise SingularReflection("S11 = -1 encountered; admittance is undefined there")
    y = (1.0 - trace.s11) / (trace.z0 * denom)
    if np.any(y.real < -_PASSIVITY_EPS):
        warnings.warn(
            f"conductance below -{_PASSIVITY_EPS:g} S; trace may not be passive",
            stacklevel=2,
        )
    return AdmittanceTrace(trace.frequencies, y)


def y_to_s(trace: AdmittanceTrace, z0: float) -> OnePortTrace:
    """S11 = (1 - z0 Y) / (1 + z0 Y) referenced to the given z0."""
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    with np.errstate(invalid="ignore"):
        zy = z0 * trace.y
        s = (1.0 - zy) / (1.0 + zy)
    # a lossless branch sampled exactly on resonance has infinite admittance;
    # the limit is a short, which reflects as -1
    infinite = np.isinf(zy.real) | np.isinf(zy.imag)
    if np.any(infinite):
        s = np.where(infinite, -1.0 + 0.0j, s)
    return OnePortTrace(trace.frequencies, s, z0=z0)


def renormalize(trace: OnePortTrace, z0_new: float) -> OnePortTrace:
    """Re-reference S11 to a new source impedance via the admittance invariant."""
    if not z0_new > 0:
        raise ValueError("z0 must be positive")
    if z0_new == trace.z0:
        return trace
    y = s_to_y(trace).y
    zy = z0_new * y
    s_new = (1.0 - zy) / (1.0 + zy)
    return OnePortTrace(trace.frequencies, s_new, z0=z0_new, comments=trace.comments)


def _kasa_circle(points: np.ndarray) -> tuple[complex, float, float]:
    """Algebraic least-squares circle through complex points.

    Minimizes sum((x-cx)^2 + (y-cy)^2 - r^2)^2, which is linear in
    (cx, cy, r^2 - cx^2 - cy^2).  Exact for noiseless circular data.
    """
    x = points.real
    y = points.imag
    spread = np.column_stack([x - x.mean(), y - y.mean()])
    singular_values = np.linalg.svd(spread, compute_uv=False)
    if singular_values[-1] <= _COLLINEAR_TOL * max(singular_values[0], 1e-30):
        raise DegenerateLocus("samples are coincident or collinear; circle radius unbounded")
    coeffs = np.column_stack([2.0 * x, 2.0 * y, np.ones_like(x)])
    rhs = x * x + y * y
    (cx, cy, c), *_ = np.linalg.lstsq(coeffs, rhs, rcond=None)
    radius = float(np.sqrt(max(c + cx * cx + cy * cy, 0.0)))
    distances = np.hypot(x - cx, y - cy)
    rms = float(np.sqrt(np.mean((distances - radius) ** 2)))
    return complex(cx, cy), radius, rms


def _band_mask(frequencies: np.ndarray, band: tuple[float, float]) -> np.ndarray:
    lo, hi = band
    mask = (frequencies >= lo) & (frequencies <= hi)
    if np.count_nonzero(mask) < 5:
        raise TooFewPoints(
            f"need at least 5 samples in [{lo:g}, {hi:g}] Hz, got {np.count_nonzero(mask)}"
        )
    return mask


def fit_smith_circle(trace: OnePortTrace, band: tuple[float, float]) -> SmithCircle:
    """Fit a circle to the S11 locus restricted to a frequency band."""
    mask = _band_mask(trace.frequencies, band)
    center, radius, rms = _kasa_circle(trace.s11[mask])
    return SmithCircle(center=center, radius=radius, rms_residual=rms)


def _golden_min(fun, lo: float, hi: float, xtol: float) -> float:
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def tune_source_impedance(
    trace: OnePortTrace,
    band: tuple[float, float],
    z0_min: float = 1.0,
    z0_max: float = 5000.0,
    resolution: float = 0.1,
) -> tuple[float, OnePortTrace]:
    """Find the source impedance that centers the in-band S11 locus.

    Minimizes |center| of the fitted Smith circle over z0 in [z0_min, z0_max]
    by golden-section search to the requested resolution, cross-checked
    against a coarse geometric grid in case the objective is not unimodal.
    Returns (z0_star, trace renormalized to z0_star).
    """
    if not 0 < z0_min < z0_max:
        raise ValueError("need 0 < z0_min < z0_max")
    mask = _band_mask(trace.frequencies, band)
    y_band = s_to_y(trace).y[mask]

    def center_distance(z0: float) -> float:
        zy = z0 * y_band
        s = (1.0 - zy) / (1.0 + zy)
        center, _, _ = _kasa_circle(s)
        return abs(center)

    z_golden = _golden_min(center_distance, z0_min, z0_max, resolution)
    grid = np.geomspace(z0_min, z0_max, 64)
    grid_values = [center_distance(z) for z in grid]
    k = int(np.argmin(grid_values))
    z_refined = _golden_min(
        center_distance, grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)], resolution
    )
    z_star = float(min((z_golden, z_refined), key=center_distance))
    return z_star, renormalize(trace, z_star)
