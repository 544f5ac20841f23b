"""
Special functions used by the outage expressions.

Gamma-family functions delegate to scipy.special; the hypergeometric series
are evaluated here because the outage forms only need a few integer
parameter patterns and must report nonconvergence instead of returning nan.
"""

import math

import numpy as np
from scipy import special

from sber_outage.core.config import SERIES_MAX_TERMS, SERIES_REL_TOL
from sber_outage.core.errors import ConvergenceError, DomainError

# hyp2f1 close to z = 1 needs long series; terms are summed in vector chunks
HYP2F1_CHUNK = 4096
HYP2F1_MAX_TERMS = 1_000_000


def _is_nonpositive_integer(value: float) -> bool:
    return value <= 0 and float(value).is_integer()


def regularized_gamma_lower(a, x):
    """
    P(a, x) = gamma(a, x) / Gamma(a).

    x may be an array; every entry must be nonnegative.
    """
    if not a > 0:
        raise DomainError(f"regularized_gamma_lower needs a > 0, got a={a}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError(f"regularized_gamma_lower needs x >= 0, got x={x}")
    result = special.gammainc(a, x_arr)
    return float(result) if result.ndim == 0 else result


def regularized_gamma_upper(a, x):
    """Q(a, x) = 1 - P(a, x), computed without cancellation."""
    if not a > 0:
        raise DomainError(f"regularized_gamma_upper needs a > 0, got a={a}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError(f"regularized_gamma_upper needs x >= 0, got x={x}")
    result = special.gammaincc(a, x_arr)
    return float(result) if result.ndim == 0 else result


def ln_gamma(a: float) -> float:
    if not a > 0:
        raise DomainError(f"ln_gamma needs a > 0, got a={a}")
    return float(special.gammaln(a))


def beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"beta needs a, b > 0, got a={a}, b={b}")
    return float(special.beta(a, b))


def ln_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"ln_beta needs a, b > 0, got a={a}, b={b}")
    return float(special.betaln(a, b))


def hyp1f1(a: float, b: float, x: float) -> float:
    """
    Confluent hypergeometric function 1F1(a; b; x) by its power series.

    Negative x goes through Kummer's transformation
    1F1(a; b; x) = e^x 1F1(b - a; b; -x) so the summed terms stay positive
    when b >= a > 0.
    """
    if _is_nonpositive_integer(b):
        raise DomainError(f"hyp1f1 is undefined for nonpositive integer b={b}")
    if x == 0:
        return 1.0
    if x < 0:
        return math.exp(x) * hyp1f1(b - a, b, -x)

    total = 1.0
    term = 1.0
    for n in range(SERIES_MAX_TERMS):
        ratio = (a + n) / (b + n) * x / (n + 1)
        term *= ratio
        total += term
        if term == 0.0 or (abs(term) <= SERIES_REL_TOL * abs(total) and abs(ratio) < 1.0):
            return total
    raise ConvergenceError(
        f"hyp1f1({a}, {b}, {x}) did not converge in {SERIES_MAX_TERMS} terms"
    )


def _hyp2f1_series(a: float, b: float, c: float, z: float) -> float:
    """Direct Gauss series for 0 <= z < 1."""
    if z == 0:
        return 1.0
    total = 1.0
    term = 1.0
    start = 0
    while start < HYP2F1_MAX_TERMS:
        k = np.arange(start, start + HYP2F1_CHUNK, dtype=float)
        ratios = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        terms = term * np.cumprod(ratios)
        total += float(terms.sum())
        term = float(terms[-1])
        last_ratio = float(ratios[-1])
        if term == 0.0:
            return total
        if 0 <= last_ratio < 1 and abs(term) / (1.0 - last_ratio) <= SERIES_REL_TOL * abs(total):
            return total
        start += HYP2F1_CHUNK
    raise ConvergenceError(
        f"hyp2f1({a}, {b}; {c}; {z}) did not converge in {HYP2F1_MAX_TERMS} terms"
    )


def _hyp2f1_log_connection(a: float, b: float, w: float, log_w: float) -> float:
    """
    2F1(a, b; a + b; 1 - w) in powers of w, for the logarithmic case c = a + b.
    """
    log_prefactor = special.gammaln(a + b) - special.gammaln(a) - special.gammaln(b)
    total = 0.0
    coeff = 1.0  # (a)_n (b)_n / (n!)^2 * w^n
    for n in range(SERIES_MAX_TERMS):
        bracket = (
            2.0 * special.digamma(n + 1.0)
            - special.digamma(a + n)
            - special.digamma(b + n)
            - log_w
        )
        term = coeff * bracket
        total += term
        coeff *= (a + n) * (b + n) / ((n + 1.0) ** 2) * w
        if coeff == 0.0 or abs(term) <= SERIES_REL_TOL * abs(total):
            return math.exp(log_prefactor) * total
    raise ConvergenceError(
        f"hyp2f1 connection series for a={a}, b={b}, w={w} did not converge"
    )


def hyp2f1_complement(a: float, b: float, w: float, log_w: float = None) -> float:
    """
    2F1(a, b; a + b; 1 - w) for w in (0, 1].

    log_w may be passed when w itself underflows. The logarithmic connection
    formula is used when every term of it is positive, the direct series
    otherwise.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"hyp2f1_complement needs a, b > 0, got a={a}, b={b}")
    if log_w is None:
        if not 0 < w <= 1:
            raise DomainError(f"hyp2f1_complement needs w in (0, 1], got w={w}")
        log_w = math.log(w)
    if log_w > 0:
        raise DomainError(f"hyp2f1_complement needs w <= 1, got log(w)={log_w}")
    first_bracket = -log_w - (
        special.digamma(a) + special.digamma(b) - 2.0 * special.digamma(1.0)
    )
    if first_bracket > 1.0:
        return _hyp2f1_log_connection(a, b, w, log_w)
    return _hyp2f1_series(a, b, a + b, -math.expm1(log_w))


def hyp2f1(a: float, b: float, c: float, x: float) -> float:
    """
    Gauss hypergeometric function 2F1(a, b; c; x) for x < 1.

    x <= 0 is mapped by Pfaff's transformation
    2F1(a, b; c; x) = (1 - x)^(-a) 2F1(a, c - b; c; x / (x - 1))
    into [0, 1). Arguments up to 1/2 use the direct series; beyond that only
    the c = a + b pattern is supported, through the logarithmic connection
    formula.
    """
    if _is_nonpositive_integer(c):
        raise DomainError(f"hyp2f1 is undefined for nonpositive integer c={c}")
    if not x < 1:
        raise DomainError(f"hyp2f1 is only supported for x < 1, got x={x}")
    if x == 0:
        return 1.0
    if x < 0:
        z = x / (x - 1.0)
        return (1.0 - x) ** (-a) * _hyp2f1_unit(a, c - b, c, z, log_w=-math.log1p(-x))
    return _hyp2f1_unit(a, b, c, x, log_w=math.log1p(-x))


def _hyp2f1_unit(a: float, b: float, c: float, z: float, log_w: float) -> float:
    """2F1 on z in [0, 1), with log(1 - z) supplied."""
    if z <= 0.5:
        return _hyp2f1_series(a, b, c, z)
    if c == a + b and a > 0 and b > 0:
        return hyp2f1_complement(a, b, math.exp(log_w), log_w=log_w)
    raise DomainError(
        f"hyp2f1({a}, {b}; {c}; z={z}) is outside the supported parameter patterns"
    )
