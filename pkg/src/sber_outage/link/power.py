"""
Power accounting of the SBS: circuit consumption and radiated RF power.
"""

from sber_outage.core.errors import DomainError, InfeasibleError
from sber_outage.data.models import AlphaVariant, CircuitProfile, Duplex, SystemConfig


def circuit_power(m_tx: int, n_rx: int, circuit: CircuitProfile = None) -> float:
    """
    P_c = m_tx (P_dac + P_mix + P_filt) + 2 P_syn + n_rx (P_lna + P_mix + P_ifa + P_filr + P_adc)
    """
    if m_tx < 0 or n_rx < 0:
        raise DomainError(f"chain counts must be >= 0, got m_tx={m_tx}, n_rx={n_rx}")
    circuit = circuit or CircuitProfile()
    return m_tx * circuit.tx_chain_w + 2.0 * circuit.p_syn_w + n_rx * circuit.rx_chain_w


def transmit_power_rf(
    p_source_w: float,
    p_c_w: float,
    amp_alpha: float = 0.0,
    variant: AlphaVariant = AlphaVariant.standard,
) -> float:
    """
    Radiated power left after the circuit blocks and the amplifier.

    standard: (P_G - P_c) / (1 - alpha); conserving: (P_G - P_c) / (1 + alpha).
    """
    if p_c_w >= p_source_w:
        raise InfeasibleError(
            f"circuit consumption {p_c_w:.4f} W uses the whole budget of {p_source_w:.4f} W"
        )
    if amp_alpha < 0:
        raise DomainError(f"amp_alpha must be >= 0, got {amp_alpha}")
    if variant is AlphaVariant.standard:
        if amp_alpha >= 1:
            raise InfeasibleError(f"amp_alpha={amp_alpha} >= 1 leaves no RF power")
        return (p_source_w - p_c_w) / (1.0 - amp_alpha)
    return (p_source_w - p_c_w) / (1.0 + amp_alpha)


def amp_alpha_from(epsilon: float, eta_pa: float) -> float:
    """alpha = epsilon / eta_pa - 1 (PAR over drain efficiency)."""
    if not 0 < eta_pa <= 1:
        raise DomainError(f"eta_pa must be in (0, 1], got {eta_pa}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    alpha = epsilon / eta_pa - 1.0
    if alpha < 0:
        raise DomainError(f"epsilon={epsilon} < eta_pa={eta_pa} gives a negative alpha")
    return alpha


def circuit_power_for(config: SystemConfig) -> float:
    """Circuit consumption of the configured SBS."""
    if config.mode is Duplex.HD:
        n_rx = config.q_chains if config.hd_count_rx_chains else 0
        return circuit_power(config.q_chains, n_rx, config.circuit)
    return circuit_power(config.m_tx, config.n_rx, config.circuit)


def rf_power_for(config: SystemConfig) -> float:
    """P_RF of the configured SBS; P_G itself in the ideal case."""
    if config.ideal_power:
        return config.p_source_w
    return transmit_power_rf(
        config.p_source_w,
        circuit_power_for(config),
        config.amp_alpha,
        config.alpha_variant,
    )
