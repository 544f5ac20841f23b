import os
import sys
import tempfile
from pathlib import Path

# Must run before sber_outage.core.config is imported: it reads the data dir once.
os.environ.setdefault("SBER_DATA_DIR", tempfile.mkdtemp(prefix="sber-outage-tests-"))
os.environ.pop("SBER_WORKERS", None)

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

import pytest  # noqa: E402

from sber_outage.data.database import Database  # noqa: E402
from sber_outage.data.models import Duplex, SystemConfig  # noqa: E402
from sber_outage.data.repositories import EstimateRepository  # noqa: E402


@pytest.fixture
def fd_config() -> SystemConfig:
    """FD, M = N = 4, no EH antennas; both outages of order 0.1."""
    return SystemConfig(
        q_chains=8,
        m_tx=4,
        n_rx=4,
        mode=Duplex.FD,
        tau=1.0,
        phi_td_db=-74.0,
        phi_ur_db=-85.0,
        r_d=2.0,
        r_sbs=1.0,
    ).validate()


@pytest.fixture
def hd_config() -> SystemConfig:
    """HD, Q = 4, tau = 0.5, no EH antennas."""
    return SystemConfig(
        q_chains=4,
        m_tx=4,
        n_rx=4,
        mode=Duplex.HD,
        tau=0.5,
        phi_td_db=-90.0,
        phi_ur_db=-86.0,
        r_d=4.0,
        r_sbs=2.0,
    ).validate()


@pytest.fixture
def repository() -> EstimateRepository:
    db = Database(":memory:")
    yield EstimateRepository(db)
    db.close()
