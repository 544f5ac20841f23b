"""
Analytic outage evaluators for the HD and FD small base station.

Every analytic form has a direct numeric-integration counterpart; evaluate()
cross-checks the two and refuses to report a value when they disagree.
"""

import math
from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import integrate, special

from sber_outage.core.config import (
    DEFAULT_GL_ORDER,
    FD_SBS_AGREEMENT_ATOL,
    GL_CONVERGENCE_RTOL,
    HD_D_AGREEMENT_ATOL,
    MAX_GL_ORDER,
    QUAD_EPSABS,
    QUAD_EPSREL,
    QUAD_LIMIT,
)
from sber_outage.core.errors import AgreementError, ConvergenceError, DomainError
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import Duplex, Method, OutageReport, SystemConfig
from sber_outage.link.fading import (
    cap_onset,
    gpd_cdf,
    gpd_pdf,
    mean_field_total_power,
    p_eh_capped,
    product_leakage_pdf,
)
from sber_outage.link.power import rf_power_for
from sber_outage.numerics.quadrature import converge_in_order, laguerre_rule
from sber_outage.numerics.special import (
    beta,
    hyp1f1,
    hyp2f1_complement,
    ln_gamma,
    regularized_gamma_lower,
)

logger = get_logger(__name__)

HD_D_VARIANTS = ("closed-form-1f1", "numeric-z-integral")
FD_D_VARIANTS = ("exact", "complement", "averaged", "numeric-z-integral")
FD_SBS_METHODS = ("gl", "numeric", "numeric-z-integral")
GL_MAPPINGS = ("exp", "identity")


def threshold_snr(rate: float, fraction: float = 1.0) -> float:
    """2^(rate / fraction) - 1"""
    return math.expm1(rate * math.log(2.0) / fraction)


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf if num > 0 else 0.0
    return num / den


def _quad(func: Callable, lower: float, upper: float, points=None) -> float:
    value, _ = integrate.quad(
        func,
        lower,
        upper,
        points=points,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
    )
    return value


def _probability(value: float) -> float:
    return min(max(float(value), 0.0), 1.0)


def _require_mode(config: SystemConfig, mode: Duplex):
    if config.mode is not mode:
        raise DomainError(f"this evaluator needs mode={mode.value}, got {config.mode.value}")


# HD


def outage_hd_sbs(config: SystemConfig) -> float:
    """
    UL outage in HD: all Q antennas combine during the (1 - tau) share of the block,
    so the outage is P(Q, x*) with x* = (2^(r_sbs/(1-tau)) - 1) sigma^2 / (P_u phi_ur).
    """
    _require_mode(config, Duplex.HD)
    gamma = threshold_snr(config.r_sbs, 1.0 - config.tau)
    if gamma == 0:
        return 0.0
    x = _ratio(gamma * config.noise_w, config.p_u_w * config.phi_ur)
    return regularized_gamma_lower(config.m_tx, x)


def hd_d_constants(config: SystemConfig, p_rf: float) -> Tuple[float, float]:
    """(a2, b2): the D outage given Z = z is P(M, max(a2 - b2 z, 0))."""
    gamma = threshold_snr(config.r_d, config.tau)
    if gamma == 0:
        return 0.0, 0.0
    a2 = _ratio(gamma * config.noise_w, p_rf * config.phi_td)
    return a2, a2 * config.tau * config.eh_gain


def _hd_d_numeric(m: int, a2: float, b2: float) -> float:
    if b2 == 0:
        return regularized_gamma_lower(m, a2)

    def integrand(z):
        return regularized_gamma_lower(m, max(a2 - b2 * z, 0.0)) * gpd_pdf(z, m)

    kink = a2 / b2
    points = [kink] if 0 < kink < m else None
    return _probability(_quad(integrand, 0.0, float(m), points))


def _hd_d_closed_form(m: int, a2: float, b2: float) -> float:
    """Double sum with 1F1 terms; exact while b2 M < a2."""
    bm = b2 * m
    total = 0.0
    for j in range(m):
        kummer = hyp1f1(1.0 + j, j + m, bm)
        weight = math.exp(ln_gamma(m) - ln_gamma(j + m)) * (-bm) ** j * kummer
        for k in range(j, m):
            total += weight * a2 ** (k - j) / math.factorial(k - j)
    return 1.0 - math.exp(-a2) * total


def outage_hd_d(
    config: SystemConfig,
    variant: str = "closed-form-1f1",
    p_rf: float = None,
    check: bool = True,
) -> float:
    """
    DL outage in HD with self-energy recycling over the exact law of Z.

    The closed form is the analytic continuation of the z-integral; once
    b2 M >= a2 the threshold clamps at 0 for large z and only the numeric
    variant is exact. With check=True the closed form is compared with the
    numeric variant outside that regime.
    """
    _require_mode(config, Duplex.HD)
    if variant not in HD_D_VARIANTS:
        raise DomainError(f"unknown HD D variant '{variant}', expected one of {HD_D_VARIANTS}")
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    m = config.m_tx
    a2, b2 = hd_d_constants(config, p_rf)
    if a2 == 0:
        return 0.0
    if math.isinf(a2):
        return 1.0
    if variant == "numeric-z-integral":
        return _hd_d_numeric(m, a2, b2)
    if b2 == 0:
        return regularized_gamma_lower(m, a2)

    closed = _hd_d_closed_form(m, a2, b2)
    if b2 * m >= a2:
        logger.warning(
            f"HD D threshold clamps for z > {a2 / b2:.4f} (M={m}); closed form is only a continuation"
        )
        return _probability(closed)
    if check:
        numeric = _hd_d_numeric(m, a2, b2)
        if abs(closed - numeric) > HD_D_AGREEMENT_ATOL:
            raise AgreementError(
                f"HD D closed form {closed:.10g} and z-integral {numeric:.10g} disagree "
                f"(a2={a2:.6g}, b2={b2:.6g}, M={m})"
            )
    return _probability(closed)


# FD, D link


def _log_poisson_head(m: int, x: float) -> float:
    """log sum_{k<m} x^k / k!, so that Q(m, x) = e^{-x} times its exponential."""
    k = np.arange(m, dtype=float)
    return float(special.logsumexp(k * math.log(x) - special.gammaln(k + 1.0)))


def _fd_d_exact(m: int, a3: float, b3: float) -> float:
    """
    P(Y < (X + a3) / b3) for X ~ Exp(1), Y ~ Gamma(m, 1):
    1 - Q(m, a3/b3) + e^{a3} (1 + b3)^(-m) Q(m, a3 (1 + b3) / b3).
    """
    if b3 == 0:
        return 1.0
    if math.isinf(b3):
        return 0.0
    x1 = a3 / b3
    x2 = x1 * (1.0 + b3)
    term1 = regularized_gamma_lower(m, x1)
    # e^{a3} Q(m, x2) = e^{a3 - x2} sum_k x2^k / k!, and a3 - x2 = -x1
    log_term2 = -x1 - m * math.log1p(b3) + _log_poisson_head(m, x2)
    return _probability(term1 + math.exp(log_term2))


def fd_d_constants(config: SystemConfig, p_rf: float) -> Tuple[float, float]:
    """
    (a3, b3) of the mean-field FD D outage; a3 is inf without UL interference.
    """
    gamma = threshold_snr(config.r_d)
    p_total = mean_field_total_power(config, p_rf)
    interference = config.phi_ud * config.p_u_w
    if interference == 0:
        return math.inf, math.inf
    a3 = config.noise_w / interference
    b3 = _ratio(config.phi_td * p_total, interference * gamma)
    return a3, b3


def _fd_d_no_interference(config: SystemConfig, p_total: float) -> float:
    gamma = threshold_snr(config.r_d)
    x = _ratio(gamma * config.noise_w, config.phi_td * p_total)
    return regularized_gamma_lower(config.m_tx, x)


def fd_d_forms(config: SystemConfig, p_rf: float = None) -> Dict[str, float]:
    """All mean-field forms of the FD D outage, keyed by variant name."""
    _require_mode(config, Duplex.FD)
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    m = config.m_tx
    if threshold_snr(config.r_d) == 0:
        return {"exact": 0.0, "complement": 0.0, "averaged": 0.0}
    a3, b3 = fd_d_constants(config, p_rf)
    if math.isinf(a3):
        value = _fd_d_no_interference(config, mean_field_total_power(config, p_rf))
        return {"exact": value, "complement": value, "averaged": value}

    log_pow = -m * math.log1p(b3)
    inner = -math.expm1(log_pow)
    if a3 > 700.0:
        complement = 0.0 if inner > 0 else 1.0
    else:
        complement = 1.0 - math.exp(a3) * inner
    averaged = math.exp(min(a3 + log_pow, 0.0))
    return {
        "exact": _fd_d_exact(m, a3, b3),
        "complement": _probability(complement),
        "averaged": _probability(averaged),
    }


def _fd_d_exact_z(config: SystemConfig, p_rf: float) -> float:
    """FD D outage averaged over the exact Z with the capped energy loop."""
    m = config.m_tx
    gamma = threshold_snr(config.r_d)
    if gamma == 0:
        return 0.0
    interference = config.phi_ud * config.p_u_w

    def conditional(z):
        p_total = p_rf + float(p_eh_capped(z, config, p_rf)[0])
        if interference == 0:
            return _fd_d_no_interference(config, p_total)
        a3 = config.noise_w / interference
        b3 = _ratio(config.phi_td * p_total, interference * gamma)
        return _fd_d_exact(m, a3, b3)

    onset = cap_onset(config, p_rf)
    points = [onset] if 0 < onset < m else None
    return _probability(_quad(lambda z: conditional(z) * gpd_pdf(z, m), 0.0, float(m), points))


def outage_fd_d(config: SystemConfig, variant: str = "exact", p_rf: float = None) -> float:
    """
    DL outage in FD, interference from the UL device included.

    exact, complement and averaged take Z at its mean in the recycling loop;
    numeric-z-integral averages over the exact Z instead.
    """
    _require_mode(config, Duplex.FD)
    if variant not in FD_D_VARIANTS:
        raise DomainError(f"unknown FD D variant '{variant}', expected one of {FD_D_VARIANTS}")
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    if variant == "numeric-z-integral":
        return _fd_d_exact_z(config, p_rf)
    return fd_d_forms(config, p_rf)[variant]


# FD, SBS link


def fd_sbs_constants(config: SystemConfig, p_rf: float) -> Tuple[float, float]:
    """
    (a4, b4): the UL succeeds when ||h_ur||^2 > a4 q + b4.
    """
    gamma = threshold_snr(config.r_sbs)
    p_total = mean_field_total_power(config, p_rf)
    signal = config.p_u_w * config.phi_ur
    a4 = _ratio(gamma * config.zeta * config.gs_mag2 * p_total * config.phi_si, signal)
    b4 = _ratio(gamma * config.noise_w, signal)
    return a4, b4


def _check_term_exponent(i: int, l: int, p: int) -> int:
    exponent = -1 - i + l - p
    if exponent >= 0:
        raise DomainError(f"sum term (i={i}, l={l}, p={p}) does not decay; need i - l + p >= 0")
    return exponent


def sum_term_integrand(
    m: int, n: int, a4: float, i: int, l: int, p: int, mapping: str = "exp"
) -> Callable[[float], float]:
    """
    One (i, l, p) integrand of the UL triple sum,
    f(u) = exp(-a4 m n / (1 + u)) (1 + u)^(n - 3 - i + l - p) 2F1(n-1, n-1; m+n-2; -u),
    either as is (mapping="identity") or after u = e^t - 1 (mapping="exp").
    """
    if mapping not in GL_MAPPINGS:
        raise DomainError(f"unknown mapping '{mapping}', expected one of {GL_MAPPINGS}")
    exponent = _check_term_exponent(i, l, p)
    amn = a4 * m * n

    def h(t):
        w = math.exp(-t)
        return math.exp(-amn * w + exponent * t) * hyp2f1_complement(n - 1, m - 1, w, log_w=-t)

    if mapping == "exp":
        return h

    def f(u):
        return h(math.log1p(u)) / (1.0 + u)

    return f


@lru_cache(maxsize=128)
def _complement_on_nodes(m: int, n: int, order: int, mapping: str) -> Tuple[np.ndarray, np.ndarray]:
    """t = log(1 + u) on the GL nodes and 2F1(n-1, m-1; m+n-2; 1 - e^{-t}) there."""
    nodes = laguerre_rule(order).nodes
    t = nodes if mapping == "exp" else np.log1p(nodes)
    values = np.array([hyp2f1_complement(n - 1, m - 1, math.exp(-x), log_w=-x) for x in t])
    t = np.array(t)
    t.setflags(write=False)
    values.setflags(write=False)
    return t, values


def sum_term_integral(
    m: int, n: int, a4: float, i: int, l: int, p: int, order: int, mapping: str = "exp"
) -> float:
    """GL value of the (i, l, p) integral over [0, inf)."""
    if mapping not in GL_MAPPINGS:
        raise DomainError(f"unknown mapping '{mapping}', expected one of {GL_MAPPINGS}")
    exponent = _check_term_exponent(i, l, p)
    rule = laguerre_rule(order)
    t, complement = _complement_on_nodes(m, n, order, mapping)
    log_values = -a4 * m * n * np.exp(-t) + exponent * t
    if mapping == "identity":
        log_values = log_values - t
    return float(np.dot(rule.scaled_weights, np.exp(log_values) * complement))


def sum_term_reference(m: int, n: int, a4: float, i: int, l: int, p: int) -> float:
    """
    Adaptive-quadrature value of the (i, l, p) integral, the GL reference.

    Split at the peak of exp(-a4 m n e^{-t} + k t), with relative tolerance only.
    """
    h = sum_term_integrand(m, n, a4, i, l, p, mapping="exp")
    exponent = _check_term_exponent(i, l, p)
    peak = math.log(a4 * m * n / -exponent) if a4 * m * n > -exponent else 0.0
    total = 0.0
    for lower, upper in ((0.0, peak), (peak, math.inf)):
        if upper > lower:
            value, _ = integrate.quad(
                h, lower, upper, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT
            )
            total += value
    return total


def _log_power(x: float, k: int) -> float:
    if k == 0:
        return 0.0
    return k * math.log(x) if x > 0 else -math.inf


def _fd_sbs_gl(
    m: int, n: int, a4: float, b4: float, order: int, terms: str = "folded", mapping: str = "exp"
) -> float:
    """
    1 - P(success) with
    P(success) = C sum_{i<n} sum_{l<=i} e^{-b4} b4^l a4^(i-l) binom(i, l) / i! (mn)^(i-l)
                 sum_{p<=K} (-1)^p binom(K, p) I_{i,l,p},  C = (m-1)(n-1) B(m-1, n-1), K = m+n-3.

    terms="folded" sums the p series inside the integrand, where it is
    (1 - e^{-t})^K; terms="expanded" keeps the alternating p sum outside.
    """
    rule = laguerre_rule(order)
    t, complement = _complement_on_nodes(m, n, order, mapping)
    big_k = m + n - 3
    norm = (m - 1) * (n - 1) * beta(m - 1, n - 1)
    amn = a4 * m * n
    base = -amn * np.exp(-t)
    if mapping == "identity":
        base = base - t
    with np.errstate(divide="ignore"):
        log_leak = big_k * np.log(-np.expm1(-t))

    cache: Dict[int, float] = {}

    def inner(k: int) -> float:
        if k not in cache:
            if terms == "folded":
                values = np.exp(base - (1 + k) * t + log_leak) * complement
                cache[k] = float(np.dot(rule.scaled_weights, values))
            else:
                total = 0.0
                for p in range(big_k + 1):
                    values = np.exp(base - (1 + k + p) * t) * complement
                    total += (-1) ** p * math.comb(big_k, p) * float(
                        np.dot(rule.scaled_weights, values)
                    )
                cache[k] = total
        return cache[k]

    success = 0.0
    for i in range(n):
        for l in range(i + 1):
            k = i - l
            log_coef = (
                -b4
                + _log_power(b4, l)
                + _log_power(amn, k)
                + math.log(math.comb(i, l))
                - math.lgamma(i + 1)
            )
            if log_coef == -math.inf:
                continue
            success += math.exp(log_coef) * inner(k)
    return _probability(1.0 - norm * success)


def _fd_sbs_quad(m: int, n: int, a4: float, b4: float) -> float:
    """Outage as the integral of P(n, a4 m n w + b4) over the law of W = q / (mn)."""
    amn = a4 * m * n

    def integrand(w):
        if w <= 0:
            return 0.0
        return regularized_gamma_lower(n, amn * w + b4) * product_leakage_pdf(w, m, n)

    return _probability(_quad(integrand, 0.0, 1.0))


def _fd_sbs_exact_z(config: SystemConfig, p_rf: float) -> float:
    """UL outage over the exact (z_td, z_ur) with the capped energy loop."""
    m, n = config.m_tx, config.n_rx
    gamma = threshold_snr(config.r_sbs)
    signal = config.p_u_w * config.phi_ur
    si = config.zeta * config.gs_mag2 * config.phi_si

    def conditional(z_td):
        p_total = p_rf + float(p_eh_capped(z_td, config, p_rf)[0])
        slope = _ratio(gamma * si * p_total * z_td, signal)
        offset = _ratio(gamma * config.noise_w, signal)
        return _quad(
            lambda z_ur: regularized_gamma_lower(n, slope * z_ur + offset) * gpd_pdf(z_ur, n),
            0.0,
            float(n),
        )

    onset = cap_onset(config, p_rf)
    points = [onset] if 0 < onset < m else None
    return _probability(_quad(lambda z: conditional(z) * gpd_pdf(z, m), 0.0, float(m), points))


def _fd_sbs_converged(
    m: int, n: int, a4: float, b4: float, gl_order: int, adaptive: bool, terms: str, mapping: str
) -> Tuple[float, int]:
    if not adaptive:
        return _fd_sbs_gl(m, n, a4, b4, gl_order, terms, mapping), gl_order
    return converge_in_order(
        lambda order: _fd_sbs_gl(m, n, a4, b4, order, terms, mapping),
        start_order=gl_order,
        rtol=GL_CONVERGENCE_RTOL,
        max_order=MAX_GL_ORDER,
        atol=1e-14,
    )


def _fd_sbs_checked(
    m: int, n: int, a4: float, b4: float, gl_order: int
) -> Tuple[float, Method, Dict[str, float]]:
    """
    Adaptive GL value of the triple sum, or the q-integral when GL does not
    settle by MAX_GL_ORDER. Raises AgreementError when the two differ by
    more than FD_SBS_AGREEMENT_ATOL.
    """
    reference = _fd_sbs_quad(m, n, a4, b4)
    diagnostics = {"fd_sbs_numeric": reference}
    method = Method.closed_form
    try:
        value, order = _fd_sbs_converged(m, n, a4, b4, gl_order, True, "folded", "exp")
        diagnostics["gl_order"] = float(order)
    except ConvergenceError as e:
        logger.info(f"{e}; reporting the numeric integral")
        value = reference
        method = Method.numeric_integral
        diagnostics["gl_fallback"] = 1.0
    if abs(value - reference) > FD_SBS_AGREEMENT_ATOL:
        raise AgreementError(
            f"FD SBS triple sum {value:.10g} and q-integral {reference:.10g} disagree "
            f"(M={m}, N={n}, a4={a4:.6g}, b4={b4:.6g})"
        )
    return value, method, diagnostics


def outage_fd_sbs(
    config: SystemConfig,
    gl_order: int = DEFAULT_GL_ORDER,
    method: str = "gl",
    terms: str = "folded",
    mapping: str = "exp",
    adaptive: bool = True,
    p_rf: float = None,
) -> float:
    """
    UL outage in FD under residual self-interference.

    method="gl" evaluates the triple sum with Gauss-Laguerre integrals. When
    adaptive, the order is doubled from gl_order until stable, the q-integral
    is returned if it never settles, and the result must agree with the
    q-integral. "numeric" integrates over the law of q directly,
    "numeric-z-integral" keeps the exact z_td in the recycling loop.
    """
    _require_mode(config, Duplex.FD)
    if method not in FD_SBS_METHODS:
        raise DomainError(f"unknown FD SBS method '{method}', expected one of {FD_SBS_METHODS}")
    if terms not in ("folded", "expanded"):
        raise DomainError(f"unknown terms '{terms}', expected folded or expanded")
    p_rf = rf_power_for(config) if p_rf is None else p_rf
    m, n = config.m_tx, config.n_rx
    if threshold_snr(config.r_sbs) == 0:
        return 0.0
    if method == "numeric-z-integral":
        return _fd_sbs_exact_z(config, p_rf)
    a4, b4 = fd_sbs_constants(config, p_rf)
    if math.isinf(b4):
        return 1.0
    if a4 == 0:
        return regularized_gamma_lower(n, b4)
    if method == "numeric":
        return _fd_sbs_quad(m, n, a4, b4)
    if adaptive and terms == "folded" and mapping == "exp":
        value, _, _ = _fd_sbs_checked(m, n, a4, b4, gl_order)
        return value
    value, _ = _fd_sbs_converged(m, n, a4, b4, gl_order, adaptive, terms, mapping)
    return value


# Dispatch


def _evaluate_hd(config: SystemConfig, p_rf: float) -> OutageReport:
    m = config.m_tx
    a2, b2 = hd_d_constants(config, p_rf)
    diagnostics = {"p_rf_w": p_rf, "a2": a2, "b2": b2, "hd_d_clamped": 0.0}
    method = Method.closed_form
    if b2 > 0 and b2 * m >= a2:
        clamped_mass = 1.0 - gpd_cdf(a2 / b2, m)
        logger.warning(f"HD D clamping active: P(Z > {a2 / b2:.4f}) = {clamped_mass:.4g}")
        diagnostics["hd_d_clamped"] = 1.0
        diagnostics["clamped_mass"] = clamped_mass
        p_out_d = outage_hd_d(config, "numeric-z-integral", p_rf=p_rf)
        method = Method.numeric_integral
    else:
        p_out_d = outage_hd_d(config, "closed-form-1f1", p_rf=p_rf)
    return OutageReport(
        p_out_d=p_out_d,
        p_out_sbs=outage_hd_sbs(config),
        method=method,
        diagnostics=diagnostics,
    )


def _evaluate_fd(config: SystemConfig, p_rf: float, gl_order: int) -> OutageReport:
    m, n = config.m_tx, config.n_rx
    forms = fd_d_forms(config, p_rf)
    diagnostics = {"p_rf_w": p_rf}
    diagnostics.update({f"fd_d_{name}": value for name, value in forms.items()})
    method = Method.closed_form

    a4, b4 = fd_sbs_constants(config, p_rf)
    diagnostics.update({"a4": a4, "b4": b4})
    if threshold_snr(config.r_sbs) == 0 or a4 == 0 or math.isinf(b4):
        p_out_sbs = outage_fd_sbs(config, gl_order, p_rf=p_rf)
    else:
        p_out_sbs, method, checks = _fd_sbs_checked(m, n, a4, b4, gl_order)
        diagnostics.update(checks)
    return OutageReport(
        p_out_d=forms["exact"],
        p_out_sbs=p_out_sbs,
        method=method,
        diagnostics=diagnostics,
        fd_d_form="exact",
    )


def evaluate(config: SystemConfig, gl_order: int = DEFAULT_GL_ORDER) -> OutageReport:
    """Validate the config and compute both outages for its duplex mode."""
    config.validate()
    p_rf = rf_power_for(config)
    if config.mode is Duplex.HD:
        report = _evaluate_hd(config, p_rf)
    else:
        report = _evaluate_fd(config, p_rf, gl_order)
    logger.debug(
        f"{config.mode.value} M={config.m_tx} N={config.n_rx}: "
        f"D={report.p_out_d:.6e} SBS={report.p_out_sbs:.6e}"
    )
    return report
