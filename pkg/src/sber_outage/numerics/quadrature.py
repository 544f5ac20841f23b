"""
Gauss-Laguerre quadrature for integrals over [0, inf).
"""

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy import special

from sber_outage.core.config import (
    DEFAULT_GL_ORDER,
    GL_CONVERGENCE_RTOL,
    MAX_GL_ORDER,
)
from sber_outage.core.errors import ConvergenceError, DomainError
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import GaussLaguerreRule

logger = get_logger(__name__)


@lru_cache(maxsize=64)
def laguerre_rule(n: int) -> GaussLaguerreRule:
    """
    Order-n Gauss-Laguerre rule.

    Nodes are the roots of L_n. Weights follow
    w_s = u_s / ((n + 1)^2 L_{n+1}(u_s)^2), evaluated in log space; the
    scaled weights w_s * exp(u_s) are what gl_integrate applies to f.
    Rules are cached and their arrays are read-only.
    """
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= MAX_GL_ORDER):
        raise DomainError(f"laguerre_rule needs 1 <= n <= {MAX_GL_ORDER}, got n={n}")
    n = int(n)
    try:
        nodes, _ = special.roots_laguerre(n)
    except Exception as e:
        raise ConvergenceError(f"Laguerre root finding failed for n={n}: {e}") from e
    nodes = np.asarray(nodes, dtype=float)
    if np.any(~np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0) or nodes[0] <= 0:
        raise ConvergenceError(f"Laguerre roots for n={n} are not strictly increasing and positive")

    l_next = special.eval_laguerre(n + 1, nodes)
    log_weights = np.log(nodes) - 2.0 * np.log(n + 1.0) - 2.0 * np.log(np.abs(l_next))
    weights = np.exp(log_weights)
    scaled = np.exp(log_weights + nodes)

    for arr in (nodes, weights, scaled):
        arr.setflags(write=False)
    return GaussLaguerreRule(order=n, nodes=nodes, weights=weights, scaled_weights=scaled)


def gl_integrate(f: Callable, n: int, vectorized: bool = True) -> float:
    """
    Approximate the integral of f over [0, inf) as sum_s w_s e^{u_s} f(u_s).

    With vectorized=True, f is called once on the node array.
    """
    rule = laguerre_rule(n)
    if vectorized:
        values = np.asarray(f(rule.nodes), dtype=float)
    else:
        values = np.array([f(u) for u in rule.nodes], dtype=float)
    if values.shape != rule.nodes.shape:
        raise DomainError(
            f"integrand returned shape {values.shape}, expected {rule.nodes.shape}"
        )
    return float(np.dot(rule.scaled_weights, values))


def converge_in_order(
    evaluate_at: Callable[[int], float],
    start_order: int = DEFAULT_GL_ORDER,
    rtol: float = GL_CONVERGENCE_RTOL,
    max_order: int = MAX_GL_ORDER,
    atol: float = 0.0,
) -> Tuple[float, int]:
    """
    Double the GL order until two successive values of evaluate_at agree.

    Agreement means |I(2n) - I(n)| <= atol + rtol |I(2n)|. Returns
    (value, order used); raises ConvergenceError once max_order is reached.
    """
    order = min(start_order, max_order)
    previous = evaluate_at(order)
    if order == max_order:
        return previous, order
    while order < max_order:
        next_order = min(2 * order, max_order)
        current = evaluate_at(next_order)
        change = abs(current - previous)
        if change <= atol + rtol * abs(current):
            return current, next_order
        logger.info(f"GL order {order} -> {next_order}: change {change:.3e}")
        order, previous = next_order, current
    raise ConvergenceError(
        f"Gauss-Laguerre quadrature did not reach rtol={rtol} by order {max_order}"
    )


def gl_integrate_converged(
    f: Callable,
    start_order: int = DEFAULT_GL_ORDER,
    rtol: float = GL_CONVERGENCE_RTOL,
    max_order: int = MAX_GL_ORDER,
    vectorized: bool = True,
) -> Tuple[float, int]:
    """gl_integrate with automatic order doubling."""
    return converge_in_order(
        lambda order: gl_integrate(f, order, vectorized=vectorized),
        start_order=start_order,
        rtol=rtol,
        max_order=max_order,
    )
