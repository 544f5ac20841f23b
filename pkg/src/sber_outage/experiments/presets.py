"""
Built-in experiment presets.

Each preset is a sweep file kept as text, so `presets run` goes through the
same parser as user sweep files. Values the scenario leaves open are listed
in `required` and must be supplied with --set key=value.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from sber_outage.core.config import OUTPUT_DIR, ensure_dirs
from sber_outage.core.errors import ConfigError, ConfigErrorCode
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import SweepSpec
from sber_outage.data.parsers import parse_sweep_text
from sber_outage.experiments.reports import GL_CHECK_COLUMNS, gl_check_table
from sber_outage.experiments.sweeps import run_sweep
from sber_outage.experiments.writers import write_csv

logger = get_logger(__name__)


@dataclass(frozen=True)
class Preset:
    """A named experiment."""

    name: str
    description: str
    text: str = ""
    required: Tuple[str, ...] = ()
    kind: str = "sweep"


_FD_16 = """
mode = FD
q_chains = 16
m_tx = 8
n_rx = 8
"""

# split searches assume SIC brings the residual self-interference to the noise floor
_FD_SPLIT = _FD_16 + """
phi_si_db = -20
"""

PRESETS: Dict[str, Preset] = {
    p.name: p
    for p in (
        Preset(
            "hd-path-gain",
            "HD outage vs path gain (phi_td = phi_ur), ideal and practical power, M = 16",
            """
            mode = HD
            q_chains = 16
            tau = 0.5
            phi_ud_db = -60
            r_d = 4
            r_sbs = 4
            axis1 = ideal_power: false, true
            axis2 = phi_td_db+phi_ur_db: -90:-60:2.5
            evaluator = closed-form
            """,
        ),
        Preset(
            "fd-path-gain",
            "FD outage vs path gain (phi_td = phi_ur), ideal and practical power, M = N = 8",
            _FD_16
            + """
            phi_ud_db = -60
            r_d = 4
            r_sbs = 4
            axis1 = ideal_power: false, true
            axis2 = phi_td_db+phi_ur_db: -90:-60:2.5
            evaluator = closed-form
            """,
        ),
        Preset(
            "path-gain-mc",
            "Monte Carlo outage vs path gain for HD (M = 16) and FD (M = N = 8), phi_ud = -60 dB",
            """
            mode = HD
            q_chains = 16
            tau = 0.5
            phi_ud_db = -60
            r_d = 4
            r_sbs = 4
            axis1 = mode: HD, FD
            axis2 = phi_td_db+phi_ur_db: -90:-60:5
            evaluator = monte-carlo
            mc_budget = 10000000
            seed = 1
            """,
        ),
        Preset(
            "source-power",
            "MinMax outage vs source power, fixed HD (M = 16) and FD (M = N = 8)",
            """
            mode = HD
            q_chains = 16
            tau = 0.5
            phi_td_db = -90
            phi_ur_db = -75
            phi_ud_db = -inf
            r_d = 4
            r_sbs = 4
            axis1 = mode: HD, FD
            axis2 = p_source_w: 5:20:0.5
            evaluator = closed-form
            """,
        ),
        Preset(
            "split-curve",
            "FD outage of both links vs transmit antennas at Q = 16",
            _FD_SPLIT
            + """
            phi_td_db = -80
            phi_ur_db = -80
            phi_ud_db = -inf
            r_sbs = 3
            axis1 = m_tx: 2:14:1
            evaluator = closed-form
            """,
            required=("r_d",),
        ),
        Preset(
            "optimal-split-vs-rate",
            "Optimal transmit antennas vs r_d at Q = 16, without and with sER",
            _FD_SPLIT
            + """
            phi_td_db = -80
            phi_ur_db = -80
            phi_ud_db = -inf
            axis1 = p_eh_antennas: 0, 6
            axis2 = r_d: 1:8:0.5
            evaluator = optimize-p1
            """,
            required=("r_sbs",),
        ),
        Preset(
            "optimal-split-vs-path-gain",
            "Optimal transmit antennas vs phi_td at Q = 16, r_d = 4",
            _FD_SPLIT
            + """
            phi_ur_db = -80
            phi_ud_db = -inf
            r_d = 4
            axis1 = p_eh_antennas: 0, 6
            axis2 = phi_td_db: -90:-60:2.5
            evaluator = optimize-p1
            """,
            required=("r_sbs",),
        ),
        Preset(
            "optimal-vs-fixed",
            "Optimal FD against fixed M = N = 8 over the (r_sbs, r_d) grid",
            _FD_SPLIT
            + """
            phi_td_db = -80
            phi_ur_db = -80
            phi_ud_db = -inf
            axis1 = r_sbs: 2, 3, 4
            axis2 = r_d: 2:8:0.5
            evaluator = optimize-p1
            """,
        ),
        Preset(
            "min-chains",
            "Fewest RF chains meeting a MinMax outage target over the (r_d, r_sbs) grid",
            _FD_SPLIT
            + """
            phi_td_db = -80
            phi_ur_db = -80
            phi_ud_db = -inf
            axis1 = r_d: 2, 4, 6
            axis2 = r_sbs: 1:6:1
            evaluator = optimize-p2
            q_max = 32
            """,
            required=("delta",),
        ),
        Preset(
            "eh-antennas",
            "MinMax outage at the optimal split vs EH antennas, Q = 8",
            """
            mode = FD
            q_chains = 8
            m_tx = 4
            n_rx = 4
            phi_td_db = -80
            phi_ur_db = -80
            phi_ud_db = -inf
            phi_si_db = -20
            r_sbs = 2
            axis1 = r_d: 1, 6
            axis2 = p_eh_antennas: 0:10:1
            evaluator = optimize-p1
            """,
        ),
        Preset(
            "gl-convergence",
            "Gauss-Laguerre convergence of one UL sum term on both reference setups",
            kind="gl-check",
        ),
        Preset(
            "gpd-fit",
            "GPD fit of the leakage ratio Z against its population parameters",
            """
            mode = HD
            tau = 0.5
            axis1 = m_tx: 2, 4, 8, 16
            evaluator = fit-gpd
            mc_budget = 1000000
            seed = 1
            """,
        ),
    )
}


# short names accepted in place of the scenario names
ALIASES: Dict[str, str] = {
    "fig4a": "hd-path-gain",
    "fig4b": "fd-path-gain",
    "fig4-mc": "path-gain-mc",
    "fig5": "source-power",
    "fig6": "split-curve",
    "fig7": "optimal-split-vs-rate",
    "fig8": "optimal-split-vs-path-gain",
    "fig9": "optimal-vs-fixed",
    "fig11": "min-chains",
    "fig12": "eh-antennas",
    "fig13": "gl-convergence",
    "fig14": "gpd-fit",
}


def list_presets() -> List[Preset]:
    return list(PRESETS.values())


def aliases_of(name: str) -> List[str]:
    return [alias for alias, target in ALIASES.items() if target == name]


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[ALIASES.get(name, name)]
    except KeyError:
        raise ConfigError(
            ConfigErrorCode.UNKNOWN_KEY,
            f"unknown preset '{name}', expected one of {', '.join([*PRESETS, *ALIASES])}",
        )


def _check_required(preset: Preset, overrides: Dict[str, str]):
    missing = [key for key in preset.required if key not in overrides]
    if missing:
        raise ConfigError(
            ConfigErrorCode.MISSING_KEY,
            f"preset '{preset.name}' needs {', '.join(missing)} (use --set {missing[0]}=<value>)",
        )


def preset_sweep(name: str, overrides: Optional[Dict[str, str]] = None) -> SweepSpec:
    """The SweepSpec of a sweep preset with overrides applied."""
    preset = get_preset(name)
    overrides = dict(overrides or {})
    if preset.kind != "sweep":
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"preset '{name}' is not a sweep")
    _check_required(preset, overrides)
    overrides.setdefault("name", preset.name)
    return parse_sweep_text(preset.text, overrides)


def _gl_orders(overrides: Dict[str, str]) -> Dict[str, list]:
    options = {}
    for key, raw in overrides.items():
        if key not in ("orders", "setups"):
            raise ConfigError(
                ConfigErrorCode.UNKNOWN_KEY, f"gl-check presets accept orders and setups, got '{key}'"
            )
        try:
            options[key] = [int(item) for item in raw.split(",") if item.strip()]
        except ValueError:
            raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: '{raw}' is not a list of integers")
    return options


def run_preset(
    name: str,
    overrides: Optional[Dict[str, str]] = None,
    out_path: Optional[Path] = None,
    workers: Optional[int] = None,
    repository=None,
) -> Path:
    """Run a preset and write its CSV; returns the path written."""
    preset = get_preset(name)
    overrides = dict(overrides or {})
    if out_path is None:
        ensure_dirs()
        out_path = OUTPUT_DIR / f"{preset.name}.csv"

    if preset.kind == "gl-check":
        options = _gl_orders(overrides)
        rows = gl_check_table(**options)
        return write_csv(out_path, GL_CHECK_COLUMNS, rows)

    spec = preset_sweep(name, overrides)
    table = run_sweep(spec, workers=workers, repository=repository)
    return write_csv(out_path, table.columns, table.rows)
