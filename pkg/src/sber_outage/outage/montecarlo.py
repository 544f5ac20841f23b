"""
Monte Carlo oracle: draw-by-draw SNR/SINR chains and outage counting.

Draws are generated in fixed-size batches. Batch b of a run with master seed s
uses PCG64 seeded by SeedSequence([s, b]) (or [s, point, b] inside a sweep),
so estimates do not depend on the worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from sber_outage.core.config import MC_BATCH_SIZE, MC_MIN_SAMPLES, Z_95, get_worker_count
from sber_outage.core.errors import DomainError
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import ChannelDraw, Duplex, McEstimate, Method, OutageReport, SystemConfig
from sber_outage.link.fading import p_eh_capped, sample_batch
from sber_outage.link.power import rf_power_for

logger = get_logger(__name__)


@dataclass
class BatchCounts:
    """Event counters of one or more batches."""

    n: int = 0
    events_d: int = 0
    events_sbs: int = 0
    capped: int = 0

    def __add__(self, other: "BatchCounts") -> "BatchCounts":
        return BatchCounts(
            self.n + other.n,
            self.events_d + other.events_d,
            self.events_sbs + other.events_sbs,
            self.capped + other.capped,
        )


def batch_rng(seed: int, batch_index: int, point_index: Optional[int] = None) -> np.random.Generator:
    """Independent stream of one batch."""
    if seed < 0:
        raise DomainError(f"seed must be >= 0, got {seed}")
    entropy = [seed, batch_index] if point_index is None else [seed, point_index, batch_index]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def wilson_halfwidth(events: int, n: int, z: float = Z_95) -> float:
    """
    Half-width of the Wilson score interval; 3/n (rule of three) with no events.
    """
    if n <= 0:
        raise DomainError("confidence interval needs n > 0")
    if events == 0:
        return 3.0 / n
    p = events / n
    return z / (1.0 + z * z / n) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))


def _estimate(events: int, counts: BatchCounts, seed: int, budget_exhausted: bool = False) -> McEstimate:
    return McEstimate(
        p_hat=events / counts.n,
        n_samples=counts.n,
        ci_halfwidth_95=wilson_halfwidth(events, counts.n),
        capped_draws=counts.capped,
        seed=seed,
        n_events=events,
        budget_exhausted=budget_exhausted,
    )


def _assert_beamforming_identities(draw: ChannelDraw, rows: int = 8):
    """MRT gives w^H h = ||h||, MRC gives |w^H h|^2 / ||w||^2 = ||h||^2."""
    h_td = draw.h_td[:rows]
    h_ur = draw.h_ur[:rows]
    norm_td = np.linalg.norm(h_td, axis=1)
    w_td = h_td / norm_td[:, None]
    assert np.allclose(np.sum(np.conj(w_td) * h_td, axis=1), norm_td)
    w_ur = h_ur
    gain = np.abs(np.sum(np.conj(w_ur) * h_ur, axis=1)) ** 2 / np.sum(np.abs(w_ur) ** 2, axis=1)
    assert np.allclose(gain, np.sum(np.abs(h_ur) ** 2, axis=1))
    assert np.all((draw.z_td >= 0) & (draw.z_td <= h_td.shape[1] * (1 + 1e-12)))


def _fails(snr: np.ndarray, rate: float, fraction: float = 1.0) -> np.ndarray:
    """fraction * log2(1 + snr) < rate"""
    return fraction * np.log1p(snr) / math.log(2.0) < rate


def simulate_batch(
    config: SystemConfig, p_rf: float, size: int, rng: np.random.Generator, check: bool = False
) -> BatchCounts:
    """Draw one batch and count outage events on both links."""
    draw = sample_batch(config, rng, size)
    if __debug__ and check:
        _assert_beamforming_identities(draw)
    z_td = draw.z_td
    recycled, capped = p_eh_capped(z_td, config, p_rf)
    p_total = p_rf + recycled
    noise = config.noise_w

    if config.mode is Duplex.HD:
        snr_d = config.phi_td * p_total * draw.gain_td / noise
        snr_sbs = config.phi_ur * config.p_u_w * draw.gain_ur / noise
        fail_d = _fails(snr_d, config.r_d, config.tau)
        fail_sbs = _fails(snr_sbs, config.r_sbs, 1.0 - config.tau)
    else:
        interference_d = config.phi_ud * config.p_u_w * np.abs(draw.h_ud) ** 2
        snr_d = config.phi_td * p_total * draw.gain_td / (interference_d + noise)
        self_interference = config.phi_si * p_total * config.zeta * config.gs_mag2 * draw.q
        snr_sbs = config.phi_ur * config.p_u_w * draw.gain_ur / (self_interference + noise)
        fail_d = _fails(snr_d, config.r_d)
        fail_sbs = _fails(snr_sbs, config.r_sbs)

    return BatchCounts(
        n=size,
        events_d=int(np.count_nonzero(fail_d)),
        events_sbs=int(np.count_nonzero(fail_sbs)),
        capped=int(np.count_nonzero(capped)),
    )


def _run_batch(task: Tuple[SystemConfig, float, int, int, Optional[int], int]) -> BatchCounts:
    config, p_rf, size, seed, point_index, batch_index = task
    rng = batch_rng(seed, batch_index, point_index)
    counts = simulate_batch(config, p_rf, size, rng, check=batch_index == 0)
    logger.debug(f"batch {batch_index}: {counts}")
    return counts


def _batch_sizes(n_samples: int, batch_size: int) -> List[int]:
    full, rest = divmod(n_samples, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _run_batches(tasks: list, workers: int) -> List[BatchCounts]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_batch(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_batch, tasks))


def _check_samples(n_samples: int):
    if n_samples < MC_MIN_SAMPLES:
        raise DomainError(f"Monte Carlo needs at least {MC_MIN_SAMPLES} draws, got {n_samples}")


def mc_run(
    config: SystemConfig,
    n_samples: int,
    seed: int,
    point_index: Optional[int] = None,
    workers: Optional[int] = None,
    batch_size: int = MC_BATCH_SIZE,
) -> Tuple[McEstimate, McEstimate]:
    """(D estimate, SBS estimate) over n_samples draws."""
    config.validate()
    _check_samples(n_samples)
    p_rf = rf_power_for(config)
    workers = get_worker_count() if workers is None else workers
    tasks = [
        (config, p_rf, size, seed, point_index, index)
        for index, size in enumerate(_batch_sizes(n_samples, batch_size))
    ]
    total = BatchCounts()
    for counts in _run_batches(tasks, workers):
        total = total + counts
    if total.capped:
        logger.warning(f"energy loop capped in {total.capped} of {total.n} draws")
    return _estimate(total.events_d, total, seed), _estimate(total.events_sbs, total, seed)


def mc_hd(config: SystemConfig, n_samples: int, seed: int, **kwargs) -> Tuple[McEstimate, McEstimate]:
    if config.mode is not Duplex.HD:
        raise DomainError("mc_hd needs an HD configuration")
    return mc_run(config, n_samples, seed, **kwargs)


def mc_fd(config: SystemConfig, n_samples: int, seed: int, **kwargs) -> Tuple[McEstimate, McEstimate]:
    if config.mode is not Duplex.FD:
        raise DomainError("mc_fd needs an FD configuration")
    return mc_run(config, n_samples, seed, **kwargs)


def mc_estimate_with_target(
    config: SystemConfig,
    target_ci: float,
    max_samples: int,
    seed: int,
    workers: Optional[int] = None,
    batch_size: int = MC_BATCH_SIZE,
    point_index: Optional[int] = None,
) -> Tuple[McEstimate, McEstimate]:
    """
    Add batches until both CI half-widths are <= target_ci or max_samples is spent.

    The stopping rule is checked after every batch in batch order, so the
    result does not depend on how many workers ran the batches.
    """
    if not target_ci > 0:
        raise DomainError(f"target_ci must be positive, got {target_ci}")
    config.validate()
    _check_samples(max_samples)
    p_rf = rf_power_for(config)
    workers = get_worker_count() if workers is None else workers
    sizes = _batch_sizes(max_samples, batch_size)

    total = BatchCounts()
    met = False
    index = 0
    while index < len(sizes) and not met:
        round_sizes = sizes[index : index + max(workers, 1)]
        tasks = [
            (config, p_rf, size, seed, point_index, index + offset)
            for offset, size in enumerate(round_sizes)
        ]
        for counts in _run_batches(tasks, workers):
            total = total + counts
            index += 1
            if total.n >= MC_MIN_SAMPLES and max(
                wilson_halfwidth(total.events_d, total.n),
                wilson_halfwidth(total.events_sbs, total.n),
            ) <= target_ci:
                met = True
                break

    if not met:
        logger.warning(
            f"target CI {target_ci:g} not reached within {max_samples} draws "
            f"(D: {wilson_halfwidth(total.events_d, total.n):.3g}, "
            f"SBS: {wilson_halfwidth(total.events_sbs, total.n):.3g})"
        )
    return (
        _estimate(total.events_d, total, seed, budget_exhausted=not met),
        _estimate(total.events_sbs, total, seed, budget_exhausted=not met),
    )


def mc_evaluate(
    config: SystemConfig,
    n_samples: int,
    seed: int,
    point_index: Optional[int] = None,
    workers: Optional[int] = None,
    repository=None,
) -> OutageReport:
    """
    Monte Carlo counterpart of closedform.evaluate.

    repository, when given, is an EstimateRepository consulted before
    simulating and filled afterwards.
    """
    estimates = None
    if repository is not None:
        estimates = repository.get(config, n_samples, seed, MC_BATCH_SIZE, point_index)
    if estimates is None:
        estimates = mc_run(config, n_samples, seed, point_index=point_index, workers=workers)
        if repository is not None:
            repository.save(config, n_samples, seed, MC_BATCH_SIZE, point_index, *estimates)
    est_d, est_sbs = estimates
    return OutageReport(
        p_out_d=est_d.p_hat,
        p_out_sbs=est_sbs.p_hat,
        method=Method.monte_carlo,
        diagnostics={"n_samples": float(est_d.n_samples), "seed": float(seed)},
        ci_d=est_d.ci_halfwidth_95,
        ci_sbs=est_sbs.ci_halfwidth_95,
        capped_draws=est_d.capped_draws,
    )
