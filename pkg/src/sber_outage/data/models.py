"""
Data models for sber-outage.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from sber_outage.core.config import DEFAULT_CIRCUIT_MW, LINK_DEFAULTS
from sber_outage.core.errors import ConfigError, ConfigErrorCode


class Duplex(Enum):
    """Duplex mode of the SBS."""

    HD = "HD"
    FD = "FD"


class AlphaVariant(Enum):
    """Which amplifier relation turns (P_G - P_c) into P_RF."""

    standard = "paper"  # (P_G - P_c) / (1 - alpha)
    conserving = "conserving"  # (P_G - P_c) / (1 + alpha)


class Method(Enum):
    """How an outage probability was obtained."""

    closed_form = "closed-form"
    numeric_integral = "numeric-integral"
    monte_carlo = "monte-carlo"


def db_to_linear(value_db: float) -> float:
    """10^(dB/10); -inf maps to a zero gain."""
    if value_db == -math.inf:
        return 0.0
    return 10.0 ** (value_db / 10.0)


@dataclass(frozen=True)
class CircuitProfile:
    """Per-block transceiver circuit consumption, watts."""

    p_dac_w: float = DEFAULT_CIRCUIT_MW["p_dac_w"] * 1e-3
    p_adc_w: float = DEFAULT_CIRCUIT_MW["p_adc_w"] * 1e-3
    p_mix_w: float = DEFAULT_CIRCUIT_MW["p_mix_w"] * 1e-3
    p_lna_w: float = DEFAULT_CIRCUIT_MW["p_lna_w"] * 1e-3
    p_ifa_w: float = DEFAULT_CIRCUIT_MW["p_ifa_w"] * 1e-3
    p_filt_w: float = DEFAULT_CIRCUIT_MW["p_filt_w"] * 1e-3
    p_filr_w: float = DEFAULT_CIRCUIT_MW["p_filr_w"] * 1e-3
    p_syn_w: float = DEFAULT_CIRCUIT_MW["p_syn_w"] * 1e-3

    def validate(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ConfigError(
                    ConfigErrorCode.CIRCUIT_NONPOSITIVE,
                    f"{f.name} must be positive, got {value}",
                )

    @property
    def tx_chain_w(self) -> float:
        """Consumption of one transmit chain."""
        return self.p_dac_w + self.p_mix_w + self.p_filt_w

    @property
    def rx_chain_w(self) -> float:
        """Consumption of one receive chain."""
        return self.p_lna_w + self.p_mix_w + self.p_ifa_w + self.p_filr_w + self.p_adc_w


@dataclass(frozen=True)
class SystemConfig:
    """
    Full parameter set of the link.

    Gains are stored in dB as given at the configuration boundary; every
    computation goes through the linear properties below.
    """

    q_chains: int = 16
    m_tx: int = 8
    n_rx: int = 8
    p_eh_antennas: int = 0
    mode: Duplex = Duplex.FD
    tau: float = 1.0
    p_source_w: float = LINK_DEFAULTS["p_source_w"]
    p_u_w: float = LINK_DEFAULTS["p_u_w"]
    noise_w: float = LINK_DEFAULTS["noise_w"]
    eta: float = LINK_DEFAULTS["eta"]
    zeta_db: float = LINK_DEFAULTS["zeta_db"]
    phi_td_db: float = -80.0
    phi_ur_db: float = -80.0
    phi_ud_db: float = LINK_DEFAULTS["phi_ud_db"]
    phi_g_db: float = LINK_DEFAULTS["phi_g_db"]
    phi_si_db: float = LINK_DEFAULTS["phi_si_db"]
    g_mag2: float = 1.0
    gs_mag2: float = 1.0
    r_d: float = 4.0
    r_sbs: float = 4.0
    amp_alpha: float = 0.0
    circuit: CircuitProfile = field(default_factory=CircuitProfile)
    alpha_variant: AlphaVariant = AlphaVariant.standard
    ideal_power: bool = False
    hd_count_rx_chains: bool = True

    # Linear views

    @property
    def zeta(self) -> float:
        return db_to_linear(self.zeta_db)

    @property
    def phi_td(self) -> float:
        return db_to_linear(self.phi_td_db)

    @property
    def phi_ur(self) -> float:
        return db_to_linear(self.phi_ur_db)

    @property
    def phi_ud(self) -> float:
        return db_to_linear(self.phi_ud_db)

    @property
    def phi_g(self) -> float:
        return db_to_linear(self.phi_g_db)

    @property
    def phi_si(self) -> float:
        return db_to_linear(self.phi_si_db)

    @property
    def eh_gain(self) -> float:
        """c = eta * P * phi_g * |g|^2, the loop gain per unit of Z (before tau)."""
        return self.eta * self.p_eh_antennas * self.phi_g * self.g_mag2

    @property
    def effective_tau(self) -> float:
        """Fraction of the block used for DL transmission and harvesting."""
        return 1.0 if self.mode is Duplex.FD else self.tau

    @property
    def rx_antennas(self) -> int:
        """Antennas combining the UL signal (all Q antennas in HD)."""
        return self.m_tx if self.mode is Duplex.HD else self.n_rx

    def validate(self) -> "SystemConfig":
        """
        Check every constraint; raise ConfigError with a distinct code.
        """
        for name in ("p_source_w", "p_u_w", "noise_w"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(
                    ConfigErrorCode.NONPOSITIVE_POWER,
                    f"{name} must be a positive finite power in watts, got {value}",
                )
        if self.mode is Duplex.FD:
            if self.tau != 1.0:
                raise ConfigError(
                    ConfigErrorCode.FD_TAU, f"FD requires tau = 1, got {self.tau}"
                )
            if self.m_tx < 2 or self.n_rx < 2:
                raise ConfigError(
                    ConfigErrorCode.FD_MIN_ANTENNAS,
                    f"FD requires m_tx >= 2 and n_rx >= 2, got M={self.m_tx}, N={self.n_rx}",
                )
            if self.m_tx + self.n_rx != self.q_chains:
                raise ConfigError(
                    ConfigErrorCode.FD_SPLIT,
                    f"FD requires m_tx + n_rx = q_chains, got {self.m_tx} + {self.n_rx} != {self.q_chains}",
                )
        else:
            if not 0.0 < self.tau < 1.0:
                raise ConfigError(
                    ConfigErrorCode.TAU_RANGE, f"HD requires tau in (0, 1), got {self.tau}"
                )
            if self.q_chains < 2:
                raise ConfigError(
                    ConfigErrorCode.HD_MIN_ANTENNAS,
                    f"HD requires q_chains >= 2, got {self.q_chains}",
                )
            if self.m_tx != self.q_chains or self.n_rx != self.q_chains:
                raise ConfigError(
                    ConfigErrorCode.HD_SPLIT,
                    f"HD uses all antennas: m_tx = n_rx = q_chains, got "
                    f"M={self.m_tx}, N={self.n_rx}, Q={self.q_chains}",
                )
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError(ConfigErrorCode.ETA_RANGE, f"eta must be in (0, 1], got {self.eta}")
        if self.zeta_db > 0:
            raise ConfigError(
                ConfigErrorCode.ZETA_RANGE, f"zeta_db must be <= 0, got {self.zeta_db}"
            )
        if self.p_eh_antennas < 0:
            raise ConfigError(
                ConfigErrorCode.NEGATIVE_EH_ANTENNAS,
                f"p_eh_antennas must be >= 0, got {self.p_eh_antennas}",
            )
        if self.amp_alpha < 0:
            raise ConfigError(
                ConfigErrorCode.NEGATIVE_ALPHA, f"amp_alpha must be >= 0, got {self.amp_alpha}"
            )
        if self.r_d < 0 or self.r_sbs < 0:
            raise ConfigError(
                ConfigErrorCode.NEGATIVE_RATE,
                f"rates must be >= 0, got r_d={self.r_d}, r_sbs={self.r_sbs}",
            )
        if not (self.g_mag2 > 0 and self.gs_mag2 > 0):
            raise ConfigError(
                ConfigErrorCode.NONPOSITIVE_CHANNEL,
                f"g_mag2 and gs_mag2 must be positive, got {self.g_mag2}, {self.gs_mag2}",
            )
        self.circuit.validate()
        return self

    def replace(self, **changes) -> "SystemConfig":
        """Copy with changed fields (unvalidated)."""
        return replace(self, **changes)

    def with_split(self, m_tx: int, n_rx: int) -> "SystemConfig":
        """Copy with a new FD antenna split; Q follows M + N."""
        return replace(self, m_tx=m_tx, n_rx=n_rx, q_chains=m_tx + n_rx)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a flat dictionary (circuit fields inlined)."""
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, CircuitProfile):
                data.update(asdict(value))
            elif isinstance(value, Enum):
                data[f.name] = value.value
            else:
                data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemConfig":
        """Create from a flat dictionary as produced by to_dict."""
        circuit_keys = {f.name for f in fields(CircuitProfile)}
        circuit = CircuitProfile(**{k: v for k, v in data.items() if k in circuit_keys})
        values = {k: v for k, v in data.items() if k not in circuit_keys}
        if "mode" in values and not isinstance(values["mode"], Duplex):
            values["mode"] = Duplex(values["mode"])
        if "alpha_variant" in values and not isinstance(values["alpha_variant"], AlphaVariant):
            values["alpha_variant"] = AlphaVariant(values["alpha_variant"])
        return cls(circuit=circuit, **values)

    def fingerprint(self) -> str:
        """Stable hash of every field, used as cache key."""
        payload = json.dumps(self.to_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def config_field_names() -> List[str]:
    """Flat key names accepted by config files."""
    names = [f.name for f in fields(SystemConfig) if f.name != "circuit"]
    return names + [f.name for f in fields(CircuitProfile)]


@dataclass(frozen=True, eq=False)
class GaussLaguerreRule:
    """
    Nodes and weights of an order-n Gauss-Laguerre rule.

    scaled_weights holds w_s * exp(u_s), the factor applied to f(u_s) when
    integrating an unweighted f over [0, inf).
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray


@dataclass(frozen=True)
class GpdParams:
    """Generalized Pareto (location, scale, shape)."""

    location: float = 0.0
    scale: float = 1.0
    shape: float = 0.0
    method: str = "mle"

    @property
    def upper_support(self) -> float:
        """Finite right end mu - sigma/xi when xi < 0, inf otherwise."""
        if self.shape < 0:
            return self.location - self.scale / self.shape
        return math.inf

    @classmethod
    def for_antennas(cls, m: int) -> "GpdParams":
        """Population parameters of Z for m antennas."""
        return cls(location=0.0, scale=m / (m - 1), shape=-1.0 / (m - 1), method="theory")


@dataclass(frozen=True, eq=False)
class ChannelDraw:
    """
    Channel vectors of one block, or of a batch when arrays carry a leading axis.
    """

    h_td: np.ndarray
    h_ur: np.ndarray
    h_ud: np.ndarray

    @staticmethod
    def _leakage(h: np.ndarray) -> np.ndarray:
        return np.abs(h.sum(axis=-1)) ** 2 / np.sum(np.abs(h) ** 2, axis=-1)

    @property
    def z_td(self):
        return self._leakage(self.h_td)

    @property
    def z_ur(self):
        return self._leakage(self.h_ur)

    @property
    def q(self):
        return self.z_td * self.z_ur

    @property
    def gain_td(self):
        """||h_td||^2"""
        return np.sum(np.abs(self.h_td) ** 2, axis=-1)

    @property
    def gain_ur(self):
        """||h_ur||^2"""
        return np.sum(np.abs(self.h_ur) ** 2, axis=-1)


@dataclass
class OutageReport:
    """Paired DL/UL outage probabilities."""

    p_out_d: float
    p_out_sbs: float
    method: Method = Method.closed_form
    diagnostics: Dict[str, float] = field(default_factory=dict)
    ci_d: float = 0.0
    ci_sbs: float = 0.0
    capped_draws: int = 0
    fd_d_form: Optional[str] = None

    @property
    def minmax(self) -> float:
        return max(self.p_out_d, self.p_out_sbs)

    @property
    def method_label(self) -> str:
        """Method tag with the FD downlink form appended, e.g. closed-form/fd-d-exact."""
        if self.fd_d_form is None:
            return self.method.value
        return f"{self.method.value}/fd-d-{self.fd_d_form}"

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "p_out_d": self.p_out_d,
            "p_out_sbs": self.p_out_sbs,
            "minmax": self.minmax,
            "method": self.method_label,
            "ci_d": self.ci_d,
            "ci_sbs": self.ci_sbs,
            "capped_draws": self.capped_draws,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass
class McEstimate:
    """Frequency estimate of one outage event."""

    p_hat: float
    n_samples: int
    ci_halfwidth_95: float
    capped_draws: int = 0
    seed: int = 0
    n_events: int = 0
    budget_exhausted: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "McEstimate":
        """Create from dictionary."""
        return cls(**data)


@dataclass
class SplitPoint:
    """Outages of one (M, N) split."""

    m_tx: int
    n_rx: int
    p_out_d: float
    p_out_sbs: float
    feasible: bool = True
    method: str = "closed-form"

    @property
    def minmax(self) -> float:
        return max(self.p_out_d, self.p_out_sbs)


@dataclass
class AllocationResult:
    """Outcome of P1 (best split) or P2 (fewest RF chains)."""

    q_chains: int
    m_opt: int
    n_opt: int
    minmax_outage: float
    per_split_curve: List[SplitPoint] = field(default_factory=list)
    q_min: Optional[int] = None
    feasible: bool = True

    @property
    def best_point(self) -> Optional[SplitPoint]:
        for point in self.per_split_curve:
            if point.m_tx == self.m_opt:
                return point
        return None


def axis_keys(name: str) -> List[str]:
    """Config keys driven by one sweep axis; 'a+b' sets a and b to the same value."""
    return [key.strip() for key in name.split("+")]


class Evaluator(Enum):
    """What a sweep computes at every grid point."""

    closed_form = "closed-form"
    monte_carlo = "monte-carlo"
    optimize_p1 = "optimize-p1"
    optimize_p2 = "optimize-p2"
    fit_gpd = "fit-gpd"
    gl_check = "gl-check"


# Outage backends the split searches can run on
BACKENDS = ("closed-form", "monte-carlo")


@dataclass
class SweepSpec:
    """A one- or two-axis parameter grid over a base configuration."""

    base: SystemConfig
    axis1: Tuple[str, List[Any]]
    axis2: Optional[Tuple[str, List[Any]]] = None
    evaluator: Evaluator = Evaluator.closed_form
    mc_budget: int = 10**6
    seed: int = 1
    gl_order: int = 60
    delta: float = 1e-5
    q_max: int = 32
    backend: str = "closed-form"
    name: str = "sweep"

    def validate(self) -> "SweepSpec":
        names = set(config_field_names())
        for axis in (self.axis1, self.axis2):
            if axis is None:
                continue
            key, values = axis
            unknown = [k for k in axis_keys(key) if k not in names]
            if unknown:
                raise ConfigError(
                    ConfigErrorCode.UNKNOWN_KEY, f"sweep axis '{unknown[0]}' is not a config key"
                )
            if not values:
                raise ConfigError(ConfigErrorCode.BAD_VALUE, f"sweep axis '{key}' has no values")
        if self.backend not in BACKENDS:
            raise ConfigError(
                ConfigErrorCode.BAD_VALUE,
                f"backend '{self.backend}' is not one of {'|'.join(BACKENDS)}",
            )
        return self

    def grid(self) -> List[Tuple[Any, ...]]:
        """Grid points in row order (axis1 outer, axis2 inner)."""
        if self.axis2 is None:
            return [(v,) for v in self.axis1[1]]
        return [(v1, v2) for v1 in self.axis1[1] for v2 in self.axis2[1]]

    def axis_names(self) -> List[str]:
        names = [self.axis1[0]]
        if self.axis2 is not None:
            names.append(self.axis2[0])
        return names
