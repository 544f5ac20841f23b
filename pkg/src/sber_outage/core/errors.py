"""
Exception hierarchy for sber-outage.
"""

from enum import Enum


class SberError(Exception):
    """Base class for every error raised by the library."""


class DomainError(SberError, ValueError):
    """Argument outside the domain of a special function or density."""


class ConvergenceError(SberError, ArithmeticError):
    """Series, root finding, likelihood or quadrature did not converge."""


class InfeasibleError(SberError):
    """No admissible operating point (power budget, antenna split)."""


class EnergyLoopDivergence(SberError, ArithmeticError):
    """The self-energy recycling loop gain reached 1."""


class AgreementError(SberError, ArithmeticError):
    """An analytic form and its numeric fallback disagree beyond tolerance."""


class ConfigErrorCode(Enum):
    """Distinct codes for configuration failures."""

    UNKNOWN_KEY = "unknown-key"
    SYNTAX = "syntax"
    BAD_VALUE = "bad-value"
    NONPOSITIVE_POWER = "nonpositive-power"
    TAU_RANGE = "tau-range"
    FD_TAU = "fd-tau"
    FD_SPLIT = "fd-split"
    FD_MIN_ANTENNAS = "fd-min-antennas"
    HD_SPLIT = "hd-split"
    HD_MIN_ANTENNAS = "hd-min-antennas"
    ETA_RANGE = "eta-range"
    ZETA_RANGE = "zeta-range"
    NEGATIVE_EH_ANTENNAS = "negative-eh-antennas"
    NEGATIVE_ALPHA = "negative-alpha"
    CIRCUIT_NONPOSITIVE = "circuit-nonpositive"
    NEGATIVE_RATE = "negative-rate"
    NONPOSITIVE_CHANNEL = "nonpositive-channel"
    MISSING_KEY = "missing-key"


class ConfigError(SberError, ValueError):
    """Configuration file or field violates a constraint."""

    def __init__(self, code: ConfigErrorCode, message: str):
        super().__init__(f"[{code.value}] {message}")
        self.code = code
