"""
Sweep runner: evaluates a SweepSpec point by point and collects rows in grid order.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from sber_outage.allocation.search import make_evaluator, solve_p1, solve_p2
from sber_outage.core.config import get_worker_count
from sber_outage.core.errors import InfeasibleError
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import Duplex, Evaluator, GpdParams, SweepSpec, SystemConfig, axis_keys
from sber_outage.experiments.reports import draw_leakage, ks_distance
from sber_outage.link.fading import fit_gpd
from sber_outage.link.power import rf_power_for
from sber_outage.outage.closedform import evaluate, fd_sbs_constants, outage_fd_sbs
from sber_outage.outage.montecarlo import mc_evaluate

logger = get_logger(__name__)

OUTAGE_COLUMNS = ["p_out_d", "p_out_sbs", "minmax", "method", "ci_d", "ci_sbs", "capped_draws"]
OPTIMIZE_COLUMNS = OUTAGE_COLUMNS + ["m_opt", "n_opt", "q_min", "feasible", "fixed_minmax"]
FIT_COLUMNS = [
    "xi_hat",
    "sigma_hat",
    "xi_theory",
    "sigma_theory",
    "xi_rel_dev",
    "sigma_rel_dev",
    "fit_method",
    "ks_distance",
]
GL_COLUMNS = ["a4", "b4", "gl_value", "gl_value_doubled", "reference", "rel_error"]

EVALUATOR_COLUMNS = {
    Evaluator.closed_form: OUTAGE_COLUMNS,
    Evaluator.monte_carlo: OUTAGE_COLUMNS,
    Evaluator.optimize_p1: OPTIMIZE_COLUMNS,
    Evaluator.optimize_p2: OPTIMIZE_COLUMNS,
    Evaluator.fit_gpd: FIT_COLUMNS,
    Evaluator.gl_check: GL_COLUMNS,
}

# Evaluators whose points are independent analytic runs and can go to a process pool
POOLED = {Evaluator.closed_form, Evaluator.optimize_p1, Evaluator.optimize_p2, Evaluator.gl_check}


@dataclass
class SweepTable:
    """Header and rows of a finished sweep."""

    name: str
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)

    def column(self, name: str) -> List[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


def point_config(base: SystemConfig, assignments: Dict[str, Any]) -> SystemConfig:
    """
    Apply axis values to the base config and restore the split constraints.

    HD keeps m_tx = n_rx = q_chains. In FD, setting m_tx (or n_rx) alone keeps
    Q and moves the other side; setting q_chains alone splits it evenly.
    FD always runs with tau = 1.
    """
    config = base.replace(**assignments)
    if config.mode is Duplex.HD:
        q = next((assignments[k] for k in ("m_tx", "n_rx") if k in assignments), config.q_chains)
        return config.replace(q_chains=q, m_tx=q, n_rx=q)

    config = config.replace(tau=1.0)
    changed = {k for k in ("q_chains", "m_tx", "n_rx") if k in assignments}
    if changed == {"m_tx"}:
        return config.replace(n_rx=config.q_chains - config.m_tx)
    if changed == {"n_rx"}:
        return config.replace(m_tx=config.q_chains - config.n_rx)
    if changed == {"m_tx", "n_rx"}:
        return config.replace(q_chains=config.m_tx + config.n_rx)
    if config.m_tx + config.n_rx != config.q_chains:
        half = config.q_chains // 2
        return config.replace(m_tx=half, n_rx=config.q_chains - half)
    return config


def _assignments(spec: SweepSpec, point: Tuple[Any, ...]) -> Dict[str, Any]:
    values = {}
    for name, value in zip(spec.axis_names(), point):
        for key in axis_keys(name):
            values[key] = value
    return values


def _report_cells(report) -> List[Any]:
    return [
        report.p_out_d,
        report.p_out_sbs,
        report.minmax,
        report.method_label,
        report.ci_d,
        report.ci_sbs,
        report.capped_draws,
    ]


def _optimize_cells(result, fixed_minmax: Optional[float], backend: str) -> List[Any]:
    best = result.best_point
    if best is None:
        p_out_d = p_out_sbs = 1.0
        method = backend
    else:
        p_out_d, p_out_sbs, method = best.p_out_d, best.p_out_sbs, best.method
    return [
        p_out_d,
        p_out_sbs,
        result.minmax_outage,
        method,
        0.0,
        0.0,
        0,
        result.m_opt,
        result.n_opt,
        result.q_min,
        result.feasible,
        fixed_minmax,
    ]


def _fixed_minmax(config: SystemConfig, curve) -> Optional[float]:
    for point in curve:
        if point.m_tx == config.m_tx:
            return point.minmax
    return None


def _fit_cells(config: SystemConfig, spec: SweepSpec, index: int) -> List[Any]:
    m = config.m_tx
    samples = draw_leakage(m, spec.mc_budget, spec.seed, point_index=index)
    fitted = fit_gpd(samples)
    theory = GpdParams.for_antennas(m)
    return [
        fitted.shape,
        fitted.scale,
        theory.shape,
        theory.scale,
        (fitted.shape - theory.shape) / abs(theory.shape),
        (fitted.scale - theory.scale) / theory.scale,
        fitted.method,
        ks_distance(samples, m),
    ]


def _gl_cells(config: SystemConfig, spec: SweepSpec) -> List[Any]:
    config.validate()
    p_rf = rf_power_for(config)
    a4, b4 = fd_sbs_constants(config, p_rf)
    gl = outage_fd_sbs(config, spec.gl_order, adaptive=False, p_rf=p_rf)
    doubled = outage_fd_sbs(config, 2 * spec.gl_order, adaptive=False, p_rf=p_rf)
    reference = outage_fd_sbs(config, method="numeric", p_rf=p_rf)
    rel_error = abs(gl - reference) / reference if reference > 0 else abs(gl)
    return [a4, b4, gl, doubled, reference, rel_error]


def evaluate_point(
    spec: SweepSpec, index: int, point: Tuple[Any, ...], repository=None, workers: int = 1
) -> List[Any]:
    """One CSV row: axis values followed by the evaluator's columns."""
    config = point_config(spec.base, _assignments(spec, point))
    evaluator = spec.evaluator
    if evaluator is Evaluator.closed_form:
        cells = _report_cells(evaluate(config, gl_order=spec.gl_order))
    elif evaluator is Evaluator.monte_carlo:
        report = mc_evaluate(
            config, spec.mc_budget, spec.seed, point_index=index, workers=workers, repository=repository
        )
        cells = _report_cells(report)
    elif evaluator in (Evaluator.optimize_p1, Evaluator.optimize_p2):
        evaluate_split = make_evaluator(
            spec.backend,
            gl_order=spec.gl_order,
            n_samples=spec.mc_budget,
            seed=spec.seed,
            repository=repository,
            workers=workers,
        )
        if evaluator is Evaluator.optimize_p2:
            result = solve_p2(config, spec.delta, spec.q_max, evaluator=evaluate_split)
            cells = _optimize_cells(result, None, spec.backend)
        else:
            try:
                result = solve_p1(config, config.q_chains, evaluator=evaluate_split)
                fixed = _fixed_minmax(config, result.per_split_curve)
                cells = _optimize_cells(result, fixed, spec.backend)
            except InfeasibleError as e:
                logger.warning(f"point {index}: {e}")
                cells = [1.0, 1.0, 1.0, spec.backend, 0.0, 0.0, 0, None, None, None, False, None]
    elif evaluator is Evaluator.fit_gpd:
        cells = _fit_cells(config, spec, index)
    else:
        cells = _gl_cells(config, spec)
    return list(point) + cells


def _evaluate_task(task) -> List[Any]:
    spec, index, point = task
    return evaluate_point(spec, index, point)


def run_sweep(spec: SweepSpec, workers: Optional[int] = None, repository=None) -> SweepTable:
    """
    Evaluate every grid point. Rows come back in grid order whatever the
    completion order; Monte Carlo points run one after another with the
    workers spent on their batches.
    """
    spec.validate()
    workers = get_worker_count() if workers is None else workers
    grid = spec.grid()
    table = SweepTable(spec.name, spec.axis_names() + EVALUATOR_COLUMNS[spec.evaluator])
    logger.info(f"Running sweep '{spec.name}': {len(grid)} points, evaluator {spec.evaluator.value}")

    pooled = spec.evaluator in POOLED and spec.backend == "closed-form"
    if pooled and workers > 1 and len(grid) > 1:
        tasks = [(spec, index, point) for index, point in enumerate(grid)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            table.rows = list(pool.map(_evaluate_task, tasks))
        return table

    for index, point in enumerate(grid):
        table.rows.append(evaluate_point(spec, index, point, repository=repository, workers=workers))
        logger.debug(f"point {index + 1}/{len(grid)} done")
    return table

