"""
Self-check reports: GPD fit of the leakage ratio and Gauss-Laguerre convergence.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from sber_outage.core.config import HISTOGRAM_BINS
from sber_outage.core.errors import DomainError
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import GpdParams
from sber_outage.link.fading import fit_gpd, gpd_cdf, gpd_pdf, sample_leakage
from sber_outage.outage.closedform import GL_MAPPINGS, sum_term_integral, sum_term_reference
from sber_outage.outage.montecarlo import batch_rng

logger = get_logger(__name__)

# complex entries drawn per chunk when sampling Z
LEAKAGE_CHUNK_ENTRIES = 2**22

DEFAULT_GL_ORDERS = (5, 10, 20, 40, 80, 160)

HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "density", "gpd_pdf"]
GL_CHECK_COLUMNS = ["setup", "order", "mapping", "value", "rel_change", "rel_error"]


@dataclass(frozen=True)
class GlSetup:
    """One (i, l, p) integral of the UL triple sum with its (M, N, a4)."""

    m: int
    n: int
    a4: float
    l: int
    p: int
    i: int


GL_SETUPS: Dict[int, GlSetup] = {
    1: GlSetup(m=3, n=4, a4=20.0, l=2, p=2, i=2),
    2: GlSetup(m=2, n=2, a4=46.0, l=4, p=4, i=2),
}


@dataclass
class GpdFitReport:
    """Fitted against population GPD parameters of Z."""

    m: int
    n_samples: int
    seed: int
    fitted: GpdParams
    theory: GpdParams
    ks_distance: float

    @property
    def shape_rel_dev(self) -> float:
        return (self.fitted.shape - self.theory.shape) / abs(self.theory.shape)

    @property
    def scale_rel_dev(self) -> float:
        return (self.fitted.scale - self.theory.scale) / self.theory.scale


@dataclass
class GlCheckRow:
    order: int
    mapping: str
    value: float
    rel_change: Optional[float]
    rel_error: float


def draw_leakage(m: int, n_samples: int, seed: int, point_index: Optional[int] = None) -> np.ndarray:
    """n_samples draws of Z, generated in chunks on the batch streams of the seed."""
    if m < 2:
        raise DomainError(f"Z needs m >= 2 antennas, got {m}")
    rows = max(1, LEAKAGE_CHUNK_ENTRIES // m)
    chunks = []
    remaining = n_samples
    batch = 0
    while remaining > 0:
        size = min(rows, remaining)
        chunks.append(sample_leakage(m, batch_rng(seed, batch, point_index), size))
        remaining -= size
        batch += 1
    return np.concatenate(chunks)


def ks_distance(samples: np.ndarray, m: int) -> float:
    """Kolmogorov-Smirnov distance of the samples to the law of Z."""
    return float(stats.kstest(samples, lambda z: gpd_cdf(z, m)).statistic)


def fit_report(m: int, n_samples: int, seed: int) -> GpdFitReport:
    """Sample Z for m antennas, fit the GPD and compare with the population law."""
    samples = draw_leakage(m, n_samples, seed)
    report = GpdFitReport(
        m=m,
        n_samples=n_samples,
        seed=seed,
        fitted=fit_gpd(samples),
        theory=GpdParams.for_antennas(m),
        ks_distance=ks_distance(samples, m),
    )
    logger.info(
        f"GPD fit M={m}: xi={report.fitted.shape:.5f} (theory {report.theory.shape:.5f}), "
        f"sigma={report.fitted.scale:.5f} (theory {report.theory.scale:.5f})"
    )
    return report


def histogram_rows(m: int, n_samples: int, seed: int, bins: int = HISTOGRAM_BINS) -> List[List[float]]:
    """
    Empirical density of Z on [0, m] next to the closed-form density at bin centres.
    """
    samples = draw_leakage(m, n_samples, seed)
    density, edges = np.histogram(samples, bins=bins, range=(0.0, float(m)), density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    theory = gpd_pdf(centres, m)
    return [
        [float(lo), float(hi), float(d), float(t)]
        for lo, hi, d, t in zip(edges[:-1], edges[1:], density, theory)
    ]


def gl_check(
    setup: GlSetup,
    orders: Sequence[int] = DEFAULT_GL_ORDERS,
    mappings: Sequence[str] = GL_MAPPINGS,
) -> List[GlCheckRow]:
    """
    GL value of one sum term per order and mapping, with the relative change
    from the previous order and the relative error against adaptive quadrature.
    """
    if not orders or any(o < 1 for o in orders):
        raise DomainError(f"GL orders must be positive, got {list(orders)}")
    reference = sum_term_reference(setup.m, setup.n, setup.a4, setup.i, setup.l, setup.p)
    logger.info(f"GL check reference for {setup}: {reference:.12e}")
    rows = []
    for mapping in mappings:
        previous = None
        for order in sorted(orders):
            value = sum_term_integral(
                setup.m, setup.n, setup.a4, setup.i, setup.l, setup.p, order, mapping
            )
            change = abs(value - previous) / abs(value) if previous is not None and value else None
            rows.append(
                GlCheckRow(
                    order=order,
                    mapping=mapping,
                    value=value,
                    rel_change=change,
                    rel_error=abs(value - reference) / abs(reference),
                )
            )
            previous = value
    return rows


def resolve_setup(setup: Union[int, GlSetup]) -> GlSetup:
    if isinstance(setup, GlSetup):
        return setup
    if setup not in GL_SETUPS:
        raise DomainError(f"unknown GL setup {setup}, expected one of {sorted(GL_SETUPS)}")
    return GL_SETUPS[setup]


def gl_check_table(
    setups: Sequence[Union[int, GlSetup]] = tuple(GL_SETUPS),
    orders: Sequence[int] = DEFAULT_GL_ORDERS,
) -> List[List[object]]:
    """Rows of gl_check over numbered or custom setups, ready for the CSV writer."""
    rows = []
    for setup in setups:
        label = setup if isinstance(setup, int) else "custom"
        for row in gl_check(resolve_setup(setup), orders):
            rows.append([label, row.order, row.mapping, row.value, row.rel_change, row.rel_error])
    return rows


def relative_change_decreasing(rows: List[GlCheckRow], mapping: str = "exp") -> bool:
    """Whether successive relative changes shrink along the orders of one mapping."""
    changes = [r.rel_change for r in rows if r.mapping == mapping and r.rel_change is not None]
    return all(b < a or b == 0.0 for a, b in zip(changes, changes[1:])) and not any(
        math.isnan(c) for c in changes
    )
