"""
Exhaustive antenna-allocation search for the FD small base station.
"""

from typing import Callable, List, Optional, Tuple, Union

from sber_outage.core.config import DEFAULT_GL_ORDER, MC_DEFAULT_SAMPLES
from sber_outage.core.errors import DomainError, EnergyLoopDivergence, InfeasibleError
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import (
    BACKENDS,
    AllocationResult,
    Duplex,
    OutageReport,
    SplitPoint,
    SystemConfig,
)
from sber_outage.outage.closedform import evaluate
from sber_outage.outage.montecarlo import mc_evaluate

logger = get_logger(__name__)

MIN_CHAINS = 4


def make_evaluator(
    backend: str = "closed-form",
    gl_order: int = DEFAULT_GL_ORDER,
    n_samples: int = MC_DEFAULT_SAMPLES,
    seed: int = 1,
    repository=None,
    workers: Optional[int] = None,
) -> Callable[[SystemConfig], OutageReport]:
    """Outage evaluator for one split, analytic or Monte Carlo."""
    if backend not in BACKENDS:
        raise DomainError(f"unknown backend '{backend}', expected one of {BACKENDS}")
    if backend == "closed-form":
        return lambda config: evaluate(config, gl_order=gl_order)
    return lambda config: mc_evaluate(
        config, n_samples, seed, point_index=config.m_tx, workers=workers, repository=repository
    )


def split_curve(
    config: SystemConfig, q: int, evaluator: Callable[[SystemConfig], OutageReport]
) -> List[SplitPoint]:
    """Outages of every split M + N = q with M, N >= 2, in increasing M."""
    curve = []
    for m in range(2, q - 1):
        split = config.with_split(m, q - m)
        try:
            report = evaluator(split)
        except (InfeasibleError, EnergyLoopDivergence) as e:
            logger.info(f"split M={m}, N={q - m} infeasible: {e}")
            curve.append(SplitPoint(m, q - m, 1.0, 1.0, feasible=False))
            continue
        curve.append(
            SplitPoint(m, q - m, report.p_out_d, report.p_out_sbs, method=report.method_label)
        )
    return curve


def _best_point(curve: List[SplitPoint]) -> Optional[SplitPoint]:
    best = None
    for point in curve:
        # strict comparison keeps the smaller M on ties
        if point.feasible and (best is None or point.minmax < best.minmax):
            best = point
    return best


def solve_p1(
    config: SystemConfig,
    q: Optional[int] = None,
    backend: str = "closed-form",
    evaluator: Callable[[SystemConfig], OutageReport] = None,
    **evaluator_options,
) -> AllocationResult:
    """
    MinMax split: the (M, N), M + N = q, minimizing max(P_out,D, P_out,SBS).

    P_RF is recomputed per split since the circuit consumption depends on it.
    """
    if config.mode is not Duplex.FD:
        raise DomainError("the antenna split problem is defined for FD configurations")
    q = config.q_chains if q is None else q
    if q < MIN_CHAINS:
        raise InfeasibleError(f"q={q} chains cannot give M, N >= 2")
    evaluator = evaluator or make_evaluator(backend, **evaluator_options)
    curve = split_curve(config, q, evaluator)
    best = _best_point(curve)
    if best is None:
        raise InfeasibleError(f"no split of q={q} chains fits the {config.p_source_w} W budget")
    logger.info(f"P1 optimum for Q={q}: M={best.m_tx}, N={best.n_rx}, minmax={best.minmax:.6e}")
    return AllocationResult(
        q_chains=q,
        m_opt=best.m_tx,
        n_opt=best.n_rx,
        minmax_outage=best.minmax,
        per_split_curve=curve,
    )


def solve_p2(
    config: SystemConfig,
    delta: float,
    q_max: int,
    backend: str = "closed-form",
    evaluator: Callable[[SystemConfig], OutageReport] = None,
    verify: bool = True,
    **evaluator_options,
) -> AllocationResult:
    """
    Fewest RF chains q in [4, q_max] whose best split meets max outage <= delta.

    With verify=True the result is re-checked: every split of q_min - 1
    must violate delta.
    """
    if not 0 < delta <= 1:
        raise DomainError(f"delta must be in (0, 1], got {delta}")
    if q_max < MIN_CHAINS:
        raise DomainError(f"q_max must be >= {MIN_CHAINS}, got {q_max}")
    evaluator = evaluator or make_evaluator(backend, **evaluator_options)

    last: Optional[AllocationResult] = None
    for q in range(MIN_CHAINS, q_max + 1):
        try:
            result = solve_p1(config, q, evaluator=evaluator)
        except InfeasibleError as e:
            logger.info(f"P2: q={q} infeasible ({e})")
            continue
        last = result
        if result.minmax_outage <= delta:
            result.q_min = q
            result.feasible = True
            if verify and q > MIN_CHAINS:
                _verify_minimal(config, q - 1, delta, evaluator)
            logger.info(f"P2: q_min={q} for delta={delta:g}")
            return result

    logger.info(f"P2: no q <= {q_max} meets delta={delta:g}")
    if last is None:
        return AllocationResult(
            q_chains=q_max, m_opt=0, n_opt=0, minmax_outage=1.0, q_min=None, feasible=False
        )
    last.q_min = None
    last.feasible = False
    return last


def _verify_minimal(config: SystemConfig, q: int, delta: float, evaluator):
    """Brute-force check that no split of q chains meets delta."""
    for point in split_curve(config, q, evaluator):
        if point.feasible and point.minmax <= delta:
            raise InfeasibleError(
                f"P2 minimality violated: q={q}, M={point.m_tx} already meets delta={delta:g}"
            )


def sweep_eh_antennas(
    config: SystemConfig,
    p_values: List[int],
    optimize: bool = False,
    backend: str = "closed-form",
    **evaluator_options,
) -> List[Tuple[int, Union[AllocationResult, OutageReport]]]:
    """
    MinMax outage against the number of EH antennas, at the configured split
    or at the optimal split of the configured Q.
    """
    evaluator = make_evaluator(backend, **evaluator_options)
    results = []
    for p in p_values:
        if p < 0 or int(p) != p:
            raise DomainError(f"EH antenna counts must be nonnegative integers, got {p}")
        point = config.replace(p_eh_antennas=int(p))
        if optimize:
            results.append((int(p), solve_p1(point, config.q_chains, evaluator=evaluator)))
        else:
            results.append((int(p), evaluator(point)))
    return results
