"""Exception types shared across the toolkit."""


class SawkitError(Exception):
    """Base class for all toolkit-specific errors."""


# Touchstone parsing


class MalformedOptionLine(SawkitError):
    """Option line is missing, duplicated, or contains unknown tokens."""


class NonMonotonicFrequency(SawkitError):
    """Frequencies must be positive and strictly increasing."""


class WrongColumnCount(SawkitError):
    """A data row is not three whitespace-separated numbers."""


class EmptyData(SawkitError):
    """File contains fewer than two data rows."""


# One-port network math


class SingularReflection(SawkitError):
    """S11 too close to -1 for the admittance transform."""


class TooFewPoints(SawkitError):
    """Not enough samples inside the requested band."""


class DegenerateLocus(SawkitError):
    """Points are coincident or collinear; no finite circle fits them."""


# Metric extraction


class ResonanceNotBracketed(SawkitError):
    """Trace does not bracket a series/parallel resonance pair."""


class DomainError(SawkitError):
    """Arguments lie outside the operation's domain."""


class EmptyBand(SawkitError):
    """No usable samples inside the requested band."""


# mBVD fitting


class NegativeStaticCapacitance(SawkitError):
    """Static-capacitance estimate came out non-positive."""


class NonFiniteResidual(SawkitError):
    """Fit residual is not finite."""


# Frequency scaling


class OutOfTableRange(SawkitError):
    """Requested thickness ratio lies outside the dispersion-table hull."""


class TargetOutOfRange(SawkitError):
    """Target frequency is not achievable within the table hull."""
