"""
Rayleigh channel sampling, the self-energy recycling loop, and the
distributions built on the coherent leakage ratio Z = |sum h|^2 / ||h||^2.
"""

import math
import warnings

import numpy as np
from scipy import stats

from sber_outage.core.config import EH_CAP_FACTOR, MC_MIN_SAMPLES
from sber_outage.core.errors import ConvergenceError, DomainError, EnergyLoopDivergence
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import ChannelDraw, GpdParams, SystemConfig
from sber_outage.link.power import rf_power_for
from sber_outage.numerics.special import beta, hyp2f1_complement

logger = get_logger(__name__)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: real and imaginary parts each of variance 1/2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def sample_batch(config: SystemConfig, rng: np.random.Generator, size: int) -> ChannelDraw:
    """Draw `size` independent blocks; arrays carry a leading batch axis."""
    n_ur = config.rx_antennas
    return ChannelDraw(
        h_td=_complex_gaussian(rng, (size, config.m_tx)),
        h_ur=_complex_gaussian(rng, (size, n_ur)),
        h_ud=_complex_gaussian(rng, (size,)),
    )


def sample_draw(config: SystemConfig, rng: np.random.Generator) -> ChannelDraw:
    """Draw the channels of one block."""
    return ChannelDraw(
        h_td=_complex_gaussian(rng, (config.m_tx,)),
        h_ur=_complex_gaussian(rng, (config.rx_antennas,)),
        h_ud=_complex_gaussian(rng, ()),
    )


def sample_leakage(m: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Samples of Z for m antennas."""
    h = _complex_gaussian(rng, (size, m))
    return np.abs(h.sum(axis=1)) ** 2 / np.sum(np.abs(h) ** 2, axis=1)


# Distribution of Z


def gpd_pdf(z, m: int):
    """
    Density of Z for m antennas: ((m-1)/m) (1 - z/m)^(m-2) on [0, m].

    This is the generalized Pareto law with mu = 0, sigma = m/(m-1),
    xi = -1/(m-1).
    """
    if m < 2:
        raise DomainError(f"gpd_pdf needs m >= 2, got m={m}")
    z_arr = np.asarray(z, dtype=float)
    inside = (z_arr >= 0) & (z_arr <= m)
    base = np.clip(1.0 - z_arr / m, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(inside, (m - 1) / m * base ** (m - 2), 0.0)
    return float(dens) if dens.ndim == 0 else dens


def gpd_cdf(z, m: int):
    """F_Z(z) = 1 - (1 - z/m)^(m-1) on [0, m]."""
    if m < 2:
        raise DomainError(f"gpd_cdf needs m >= 2, got m={m}")
    z_arr = np.clip(np.asarray(z, dtype=float), 0.0, float(m))
    cdf = -np.expm1((m - 1) * np.log1p(-z_arr / m))
    return float(cdf) if cdf.ndim == 0 else cdf


def _moment_estimates(samples: np.ndarray):
    mean = float(np.mean(samples))
    var = float(np.var(samples))
    if not var > 0:
        raise ConvergenceError("samples have zero variance; no GPD fits them")
    shape = 0.5 * (1.0 - mean * mean / var)
    scale = mean * (1.0 - shape)
    return shape, scale


def fit_gpd(samples) -> GpdParams:
    """
    Fit a GPD with location fixed at 0.

    Maximum likelihood started from the moment estimates. When the MLE
    is irregular (shape <= -1/2) or fails, the moment estimate is returned;
    GpdParams.method tells which one.
    """
    data = np.asarray(samples, dtype=float).ravel()
    if data.size < MC_MIN_SAMPLES:
        raise DomainError(f"fit_gpd needs at least {MC_MIN_SAMPLES} samples, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise DomainError("fit_gpd samples must be finite")
    if np.any(data < 0):
        raise DomainError("fit_gpd samples must be >= 0 with the location fixed at 0")

    shape0, scale0 = _moment_estimates(data)
    if not (math.isfinite(shape0) and scale0 > 0):
        raise ConvergenceError(f"moment estimates are invalid: shape={shape0}, scale={scale0}")
    if shape0 <= -0.5:
        logger.info(f"GPD shape {shape0:.4f} <= -1/2: likelihood is irregular, using moments")
        return GpdParams(location=0.0, scale=scale0, shape=shape0, method="moments")

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            shape, _, scale = stats.genpareto.fit(data, shape0, floc=0.0, scale=scale0)
    except Exception as e:
        logger.warning(f"GPD likelihood fit failed ({e}); using moment estimates")
        return GpdParams(location=0.0, scale=scale0, shape=shape0, method="moments")

    if not (math.isfinite(shape) and math.isfinite(scale) and scale > 0) or shape <= -0.5:
        logger.info(f"GPD MLE irregular (shape={shape}, scale={scale}); using moments")
        return GpdParams(location=0.0, scale=scale0, shape=shape0, method="moments")
    return GpdParams(location=0.0, scale=float(scale), shape=float(shape), method="mle")


# Energy loop


def _loop_gain(config: SystemConfig) -> float:
    """tau * c, the recycled fraction per unit of Z."""
    return config.effective_tau * config.eh_gain


def p_eh(z: float, config: SystemConfig, p_rf: float = None) -> float:
    """
    Recycled power at the fixed point of P_EH = tau c z (P_EH + P_RF):
    P_EH = tau c z P_RF / (1 - tau c z).
    """
    if z < 0:
        raise DomainError(f"p_eh needs z >= 0, got z={z}")
    if config.p_eh_antennas == 0 or z == 0:
        return 0.0
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    loop = _loop_gain(config) * z
    if loop >= 1.0:
        raise EnergyLoopDivergence(
            f"energy loop gain tau*c*z = {loop:.4f} >= 1 (z={z}, P={config.p_eh_antennas})"
        )
    return loop * p_rf / (1.0 - loop)


def p_eh_capped(z, config: SystemConfig, p_rf: float = None):
    """
    Per-draw recycled power with the loop cut at EH_CAP_FACTOR * P_G.

    Returns (p_eh, capped) arrays shaped like z; capped marks the draws
    where the fixed point diverged or exceeded the cap.
    """
    z_arr = np.asarray(z, dtype=float)
    if config.p_eh_antennas == 0:
        return np.zeros_like(z_arr), np.zeros(z_arr.shape, dtype=bool)
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    cap = EH_CAP_FACTOR * config.p_source_w
    loop = _loop_gain(config) * z_arr
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(loop < 1.0, loop * p_rf / (1.0 - loop), np.inf)
    capped = raw > cap
    return np.minimum(raw, cap), capped


def cap_onset(config: SystemConfig, p_rf: float = None) -> float:
    """Smallest z at which p_eh_capped hits the cap; inf without EH antennas."""
    gain = _loop_gain(config)
    if gain == 0:
        return math.inf
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    cap = EH_CAP_FACTOR * config.p_source_w
    return cap / (cap + p_rf) / gain


def _p_eh_change_of_variables(config: SystemConfig, p_rf: float = None):
    if config.p_eh_antennas < 1:
        raise DomainError("P_EH has no density without EH antennas (P = 0)")
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    b = _loop_gain(config)
    return b * p_rf, b


def p_eh_support(config: SystemConfig, p_rf: float = None) -> float:
    """Upper end of the P_EH support; inf when the loop diverges inside [0, M]."""
    a, b = _p_eh_change_of_variables(config, p_rf)
    m = config.m_tx
    if b * m >= 1.0:
        return math.inf
    return a * m / (1.0 - b * m)


def p_eh_pdf(p, config: SystemConfig, p_rf: float = None):
    """
    Density of P_EH through z = p / (a + b p), a = tau c P_RF, b = tau c.

    When tau c M >= 1 the mass of z >= 1/(tau c) is lost and the density
    integrates to F_Z(1/(tau c)).
    """
    a, b = _p_eh_change_of_variables(config, p_rf)
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0):
        raise DomainError("p_eh_pdf needs p >= 0")
    upper = p_eh_support(config, p_rf)
    if np.any(p_arr > upper):
        raise DomainError(f"p_eh_pdf is zero beyond the support end {upper:.6g} W")
    denom = a + b * p_arr
    z = p_arr / denom
    dens = gpd_pdf(np.minimum(z, config.m_tx), config.m_tx) * a / denom**2
    dens = np.asarray(dens)
    return float(dens) if dens.ndim == 0 else dens


def p_eh_cdf(p, config: SystemConfig, p_rf: float = None):
    """P(P_EH <= p) = F_Z(p / (a + b p))."""
    a, b = _p_eh_change_of_variables(config, p_rf)
    p_arr = np.maximum(np.asarray(p, dtype=float), 0.0)
    cdf = np.asarray(gpd_cdf(p_arr / (a + b * p_arr), config.m_tx))
    return float(cdf) if cdf.ndim == 0 else cdf


# Product q = z_td z_ur


def product_leakage_pdf(w: float, m: int, n: int, log_w: float = None) -> float:
    """
    Density of W = q / (m n) on (0, 1]:
    (m-1)(n-1) B(m-1, n-1) (1-w)^(m+n-3) 2F1(n-1, m-1; m+n-2; 1-w).
    """
    if m < 2 or n < 2:
        raise DomainError(f"product_leakage_pdf needs m, n >= 2, got m={m}, n={n}")
    if log_w is None:
        if not 0 < w <= 1:
            raise DomainError(f"product_leakage_pdf needs w in (0, 1], got w={w}")
        log_w = math.log(w)
    one_minus_w = -math.expm1(log_w)
    prefix = one_minus_w ** (m + n - 3)
    return (
        (m - 1) * (n - 1) * beta(m - 1, n - 1) * prefix
        * hyp2f1_complement(n - 1, m - 1, w, log_w=log_w)
    )


def q_pdf(q: float, m: int, n: int) -> float:
    """Density of q = z_td z_ur on (0, m n)."""
    if m < 2 or n < 2:
        raise DomainError(f"q_pdf needs m, n >= 2, got m={m}, n={n}")
    if not 0 < q < m * n:
        raise DomainError(f"q_pdf needs q in (0, {m * n}), got q={q}")
    return product_leakage_pdf(q / (m * n), m, n) / (m * n)


def mean_field_total_power(config: SystemConfig, p_rf: float = None) -> float:
    """P_RF + P_EH with Z at its mean 1."""
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    if config.p_eh_antennas == 0:
        return p_rf
    return p_rf + p_eh(1.0, config, p_rf)
