"""
Data access layer for the Monte Carlo estimate cache.
"""

import json
from datetime import datetime
from typing import Optional, Tuple

from sber_outage.core.logging_utils import get_logger
from sber_outage.data.database import Database, get_db
from sber_outage.data.models import McEstimate, SystemConfig

logger = get_logger(__name__)


class EstimateRepository:
    """Repository for cached Monte Carlo estimate pairs."""

    def __init__(self, db: Optional[Database] = None):
        self._db = db

    @property
    def db(self) -> Database:
        return self._db or get_db()

    def get(
        self,
        config: SystemConfig,
        n_samples: int,
        seed: int,
        batch_size: int,
        point_index: Optional[int] = None,
    ) -> Optional[Tuple[McEstimate, McEstimate]]:
        """Cached (D, SBS) estimates, or None."""
        cursor = self.db.execute(
            """
            SELECT * FROM mc_estimates
            WHERE fingerprint = ? AND n_samples = ? AND seed = ? AND batch_size = ? AND point_index = ?
        """,
            (config.fingerprint(), n_samples, seed, batch_size, _point(point_index)),
        )
        row = cursor.fetchone()
        if not row:
            return None
        logger.debug(f"cache hit for {row['fingerprint'][:12]} (n={n_samples}, seed={seed})")
        d = McEstimate(
            p_hat=row["d_p_hat"],
            n_samples=row["n_samples"],
            ci_halfwidth_95=row["d_ci"],
            capped_draws=row["capped_draws"],
            seed=row["seed"],
            n_events=row["d_events"],
        )
        sbs = McEstimate(
            p_hat=row["sbs_p_hat"],
            n_samples=row["n_samples"],
            ci_halfwidth_95=row["sbs_ci"],
            capped_draws=row["capped_draws"],
            seed=row["seed"],
            n_events=row["sbs_events"],
        )
        return d, sbs

    def save(
        self,
        config: SystemConfig,
        n_samples: int,
        seed: int,
        batch_size: int,
        point_index: Optional[int],
        estimate_d: McEstimate,
        estimate_sbs: McEstimate,
    ):
        """Store an estimate pair, replacing any previous row with the same key."""
        self.db.execute(
            """
            INSERT OR REPLACE INTO mc_estimates (
                fingerprint, n_samples, seed, batch_size, point_index, config_json,
                d_events, d_p_hat, d_ci, sbs_events, sbs_p_hat, sbs_ci, capped_draws, created_at
            )
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """,
            (
                config.fingerprint(),
                n_samples,
                seed,
                batch_size,
                _point(point_index),
                json.dumps(config.to_dict(), sort_keys=True, default=repr),
                estimate_d.n_events,
                estimate_d.p_hat,
                estimate_d.ci_halfwidth_95,
                estimate_sbs.n_events,
                estimate_sbs.p_hat,
                estimate_sbs.ci_halfwidth_95,
                estimate_d.capped_draws,
                datetime.now().isoformat(),
            ),
        )
        self.db.commit()

    def count(self) -> int:
        cursor = self.db.execute("SELECT COUNT(*) FROM mc_estimates")
        return cursor.fetchone()[0]

    def clear(self) -> int:
        """Delete every cached estimate; returns the number of rows removed."""
        cursor = self.db.execute("DELETE FROM mc_estimates")
        self.db.commit()
        return cursor.rowcount


def _point(point_index: Optional[int]) -> int:
    return -1 if point_index is None else point_index
