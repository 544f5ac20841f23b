"""Analytic outage forms against direct integration and limiting cases."""

import math

import numpy as np
import pytest
from scipy import integrate, special

from sber_outage.core.errors import DomainError, InfeasibleError
from sber_outage.data.models import Duplex, Method, SystemConfig
from sber_outage.link.power import rf_power_for
from sber_outage.numerics.special import regularized_gamma_lower
from sber_outage.outage.closedform import (
    evaluate,
    fd_d_constants,
    fd_d_forms,
    fd_sbs_constants,
    hd_d_constants,
    outage_fd_d,
    outage_fd_sbs,
    outage_hd_d,
    outage_hd_sbs,
    sum_term_integral,
    sum_term_reference,
    threshold_snr,
)


class TestThreshold:
    def test_full_block(self):
        assert threshold_snr(2.0) == pytest.approx(3.0)

    def test_half_block_doubles_the_rate(self):
        assert threshold_snr(2.0, 0.5) == pytest.approx(15.0)

    def test_zero_rate(self):
        assert threshold_snr(0.0) == 0.0


class TestHalfDuplex:
    def test_uplink_is_gamma_cdf(self, hd_config):
        gamma = threshold_snr(hd_config.r_sbs, 1.0 - hd_config.tau)
        x = gamma * hd_config.noise_w / (hd_config.p_u_w * hd_config.phi_ur)
        assert outage_hd_sbs(hd_config) == pytest.approx(regularized_gamma_lower(4, x), rel=1e-14)

    def test_uplink_ignores_source_power(self, hd_config):
        assert outage_hd_sbs(hd_config.replace(p_source_w=5.0)) == outage_hd_sbs(hd_config)

    def test_downlink_without_recycling(self, hd_config):
        a2, b2 = hd_d_constants(hd_config, rf_power_for(hd_config))
        assert b2 == 0.0
        assert outage_hd_d(hd_config) == pytest.approx(regularized_gamma_lower(4, a2), rel=1e-14)

    @pytest.mark.parametrize("p", [1, 2, 4])
    def test_closed_form_matches_z_integral(self, hd_config, p):
        config = hd_config.replace(p_eh_antennas=p)
        a2, b2 = hd_d_constants(config, rf_power_for(config))
        assert b2 * config.m_tx < a2
        closed = outage_hd_d(config, check=False)
        numeric = outage_hd_d(config, variant="numeric-z-integral")
        assert closed == pytest.approx(numeric, abs=1e-8)

    def test_recycling_lowers_downlink_outage(self, hd_config):
        values = [outage_hd_d(hd_config.replace(p_eh_antennas=p)) for p in (0, 1, 2, 4)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_clamped_threshold_reported_numerically(self):
        config = SystemConfig(
            q_chains=16, m_tx=16, n_rx=16, mode=Duplex.HD, tau=0.5, p_eh_antennas=8
        ).validate()
        report = evaluate(config)
        assert report.method is Method.numeric_integral
        assert report.diagnostics["hd_d_clamped"] == 1.0
        assert 0.0 < report.diagnostics["clamped_mass"] < 1.0
        assert 0.0 <= report.p_out_d <= 1.0

    def test_zero_rate_never_fails(self, hd_config):
        config = hd_config.replace(r_d=0.0, r_sbs=0.0)
        assert outage_hd_d(config) == 0.0
        assert outage_hd_sbs(config) == 0.0

    def test_wrong_mode(self, fd_config):
        with pytest.raises(DomainError):
            outage_hd_d(fd_config)

    def test_unknown_variant(self, hd_config):
        with pytest.raises(DomainError):
            outage_hd_d(hd_config, variant="series")


def _fd_d_by_quadrature(m, a3, b3):
    """P(Y < (X + a3) / b3), X ~ Exp(1), Y ~ Gamma(m, 1), integrated over X."""
    value, _ = integrate.quad(
        lambda x: special.gammainc(m, (x + a3) / b3) * math.exp(-x), 0.0, np.inf, epsabs=1e-13
    )
    return value


class TestFullDuplexDownlink:
    def test_exact_form_matches_quadrature(self, fd_config):
        p_rf = rf_power_for(fd_config)
        a3, b3 = fd_d_constants(fd_config, p_rf)
        expected = _fd_d_by_quadrature(fd_config.m_tx, a3, b3)
        assert outage_fd_d(fd_config, "exact") == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("b3", [0.2, 1.0, 5.0])
    def test_exact_form_over_b3(self, fd_config, b3):
        # rescale phi_td so that b3 takes the given value
        base = fd_config.replace(phi_ud_db=-80.0)
        p_rf = rf_power_for(base)
        _, b3_now = fd_d_constants(base, p_rf)
        config = base.replace(phi_td_db=base.phi_td_db + 10.0 * math.log10(b3 / b3_now))
        a3, b3_new = fd_d_constants(config, p_rf)
        assert b3_new == pytest.approx(b3)
        expected = _fd_d_by_quadrature(config.m_tx, a3, b3_new)
        assert outage_fd_d(config) == pytest.approx(expected, rel=1e-8)

    def test_forms_are_probabilities(self, fd_config):
        for name, value in fd_d_forms(fd_config).items():
            assert 0.0 <= value <= 1.0, name

    def test_no_interference_collapses_forms(self, fd_config):
        config = fd_config.replace(phi_ud_db=-math.inf)
        forms = fd_d_forms(config)
        assert forms["exact"] == forms["complement"] == forms["averaged"]
        gamma = threshold_snr(config.r_d)
        x = gamma * config.noise_w / (config.phi_td * rf_power_for(config))
        assert forms["exact"] == pytest.approx(regularized_gamma_lower(config.m_tx, x), rel=1e-14)

    def test_exact_z_matches_mean_field_without_recycling(self, fd_config):
        exact = outage_fd_d(fd_config, "exact")
        assert outage_fd_d(fd_config, "numeric-z-integral") == pytest.approx(exact, rel=1e-8)

    def test_recycling_lowers_outage(self, fd_config):
        values = [outage_fd_d(fd_config.replace(p_eh_antennas=p)) for p in (0, 2, 4)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_more_interference_more_outage(self, fd_config):
        low = outage_fd_d(fd_config.replace(phi_ud_db=-70.0))
        high = outage_fd_d(fd_config.replace(phi_ud_db=-55.0))
        assert high > low

    def test_unknown_variant(self, fd_config):
        with pytest.raises(DomainError):
            outage_fd_d(fd_config, "midpoint")


class TestFullDuplexUplink:
    def test_gl_matches_q_integral(self, fd_config):
        gl = outage_fd_sbs(fd_config, method="gl")
        numeric = outage_fd_sbs(fd_config, method="numeric")
        assert gl == pytest.approx(numeric, abs=1e-7)

    def test_expanded_terms_match_folded(self, fd_config):
        folded = outage_fd_sbs(fd_config, gl_order=80, adaptive=False)
        expanded = outage_fd_sbs(fd_config, gl_order=80, adaptive=False, terms="expanded")
        assert expanded == pytest.approx(folded, abs=1e-7)

    def test_exact_z_matches_without_recycling(self, fd_config):
        numeric = outage_fd_sbs(fd_config, method="numeric")
        exact_z = outage_fd_sbs(fd_config, method="numeric-z-integral")
        assert exact_z == pytest.approx(numeric, abs=1e-7)

    def test_no_self_interference(self, fd_config):
        config = fd_config.replace(zeta_db=-math.inf)
        a4, b4 = fd_sbs_constants(config, rf_power_for(config))
        assert a4 == 0.0
        assert outage_fd_sbs(config) == pytest.approx(regularized_gamma_lower(config.n_rx, b4), rel=1e-14)

    def test_more_self_interference_more_outage(self, fd_config):
        low = outage_fd_sbs(fd_config.replace(zeta_db=-105.0))
        high = outage_fd_sbs(fd_config.replace(zeta_db=-95.0))
        assert high > low

    def test_unsettled_gl_falls_back_to_q_integral(self, fd_config):
        # the order-doubled GL sum is still moving at the order cap here
        config = fd_config.replace(zeta_db=-95.0)
        numeric = outage_fd_sbs(config, method="numeric")
        assert outage_fd_sbs(config) == pytest.approx(numeric, abs=1e-9)
        report = evaluate(config)
        assert report.method is Method.numeric_integral
        assert report.diagnostics["gl_fallback"] == 1.0
        assert report.p_out_sbs == pytest.approx(numeric, abs=1e-9)

    def test_recycling_raises_uplink_outage(self, fd_config):
        # recycled power adds to the residual self-interference
        assert outage_fd_sbs(fd_config.replace(p_eh_antennas=4)) > outage_fd_sbs(fd_config)

    def test_identity_mapping_converges_slower(self, fd_config):
        reference = outage_fd_sbs(fd_config, method="numeric")
        exp_err = abs(outage_fd_sbs(fd_config, gl_order=20, adaptive=False) - reference)
        id_err = abs(
            outage_fd_sbs(fd_config, gl_order=20, adaptive=False, mapping="identity") - reference
        )
        assert exp_err < id_err

    def test_bad_options(self, fd_config):
        with pytest.raises(DomainError):
            outage_fd_sbs(fd_config, method="simpson")
        with pytest.raises(DomainError):
            outage_fd_sbs(fd_config, terms="partial")


class TestSumTerm:
    @pytest.mark.parametrize("m, n, a4, i, l, p", [(3, 4, 2.0, 2, 2, 2), (4, 4, 0.5, 1, 0, 3)])
    def test_gl_matches_reference(self, m, n, a4, i, l, p):
        reference = sum_term_reference(m, n, a4, i, l, p)
        value = sum_term_integral(m, n, a4, i, l, p, order=80, mapping="exp")
        assert value == pytest.approx(reference, rel=1e-8)

    def test_non_decaying_term(self):
        with pytest.raises(DomainError):
            sum_term_integral(3, 3, 1.0, 0, 2, 0, order=10)

    def test_unknown_mapping(self):
        with pytest.raises(DomainError):
            sum_term_integral(3, 3, 1.0, 1, 0, 1, order=10, mapping="log")


class TestEvaluate:
    def test_fd_report(self, fd_config):
        report = evaluate(fd_config)
        assert report.method is Method.closed_form
        assert report.p_out_d == pytest.approx(outage_fd_d(fd_config))
        assert report.method_label == "closed-form/fd-d-exact"
        assert report.p_out_sbs == pytest.approx(report.diagnostics["fd_sbs_numeric"], abs=1e-5)
        assert report.minmax == max(report.p_out_d, report.p_out_sbs)
        assert {"fd_d_exact", "fd_d_complement", "fd_d_averaged", "a4", "b4"} <= set(report.diagnostics)

    def test_hd_report(self, hd_config):
        report = evaluate(hd_config)
        assert report.method is Method.closed_form
        assert report.p_out_sbs == outage_hd_sbs(hd_config)
        assert report.method_label == "closed-form"
        assert report.diagnostics["hd_d_clamped"] == 0.0

    def test_circuit_exceeds_budget(self, fd_config):
        with pytest.raises(InfeasibleError):
            evaluate(fd_config.replace(p_source_w=0.3))

    def test_validates(self, fd_config):
        with pytest.raises(ValueError):
            evaluate(fd_config.replace(tau=0.5))
