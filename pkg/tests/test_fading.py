"""Leakage-ratio law, the energy loop and the product density."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from sber_outage.core.config import EH_CAP_FACTOR
from sber_outage.core.errors import DomainError, EnergyLoopDivergence
from sber_outage.data.models import GpdParams, SystemConfig
from sber_outage.link.fading import (
    cap_onset,
    fit_gpd,
    gpd_cdf,
    gpd_pdf,
    mean_field_total_power,
    p_eh,
    p_eh_capped,
    p_eh_cdf,
    p_eh_pdf,
    p_eh_support,
    product_leakage_pdf,
    q_pdf,
    sample_batch,
    sample_draw,
    sample_leakage,
)
from sber_outage.link.power import rf_power_for


def _rng(seed=7):
    return np.random.default_rng(seed)


class TestLeakageLaw:
    @pytest.mark.parametrize("m", [2, 3, 4, 16])
    def test_density_normalized(self, m):
        total, _ = integrate.quad(lambda z: gpd_pdf(z, m), 0.0, m)
        assert total == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("m", [2, 4, 16])
    def test_unit_mean(self, m):
        mean, _ = integrate.quad(lambda z: z * gpd_pdf(z, m), 0.0, m)
        assert mean == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("m", [2, 5, 16])
    def test_cdf_is_scipy_genpareto(self, m):
        params = GpdParams.for_antennas(m)
        z = np.linspace(0.0, m, 41)
        expected = stats.genpareto.cdf(z, params.shape, loc=0.0, scale=params.scale)
        np.testing.assert_allclose(gpd_cdf(z, m), expected, atol=1e-12)

    def test_two_antennas_uniform(self):
        np.testing.assert_allclose(gpd_pdf(np.array([0.0, 0.7, 2.0]), 2), 0.5)

    def test_zero_outside_support(self):
        assert gpd_pdf(-0.1, 4) == 0.0
        assert gpd_pdf(4.1, 4) == 0.0
        assert gpd_cdf(5.0, 4) == 1.0

    def test_upper_support_is_m(self):
        assert GpdParams.for_antennas(6).upper_support == pytest.approx(6.0)

    def test_one_antenna_rejected(self):
        with pytest.raises(DomainError):
            gpd_pdf(0.5, 1)

    @pytest.mark.parametrize("m", [2, 4, 8])
    def test_samples_follow_the_law(self, m):
        z = sample_leakage(m, _rng(), 50_000)
        assert np.all((z >= 0) & (z <= m * (1 + 1e-12)))
        assert stats.kstest(z, lambda x: gpd_cdf(x, m)).pvalue > 1e-4


class TestChannelSampling:
    def test_batch_shapes_fd(self):
        config = SystemConfig(q_chains=10, m_tx=4, n_rx=6)
        draw = sample_batch(config, _rng(), 5)
        assert draw.h_td.shape == (5, 4)
        assert draw.h_ur.shape == (5, 6)
        assert draw.h_ud.shape == (5,)
        assert draw.q.shape == (5,)

    def test_hd_combines_with_all_antennas(self, hd_config):
        draw = sample_draw(hd_config, _rng())
        assert draw.h_ur.shape == (hd_config.q_chains,)

    def test_unit_variance_entries(self):
        config = SystemConfig(q_chains=4, m_tx=2, n_rx=2)
        draw = sample_batch(config, _rng(), 100_000)
        assert float(np.mean(np.abs(draw.h_td) ** 2)) == pytest.approx(1.0, abs=0.01)
        assert float(np.mean(draw.gain_ur)) == pytest.approx(2.0, abs=0.02)


def _eh_config(p=6, m=8):
    return SystemConfig(q_chains=2 * m, m_tx=m, n_rx=m, p_eh_antennas=p)


class TestEnergyLoop:
    def test_fixed_point(self):
        config = _eh_config()
        p_rf = rf_power_for(config)
        recycled = p_eh(1.3, config)
        loop = config.eh_gain * 1.3
        assert recycled == pytest.approx(loop * (recycled + p_rf), rel=1e-12)

    def test_no_antennas_no_power(self):
        assert p_eh(2.0, _eh_config(p=0)) == 0.0

    def test_increasing_in_z(self):
        config = _eh_config()
        values = [p_eh(z, config) for z in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_divergence(self):
        config = _eh_config(p=10)
        assert config.eh_gain * 8 >= 1.0
        with pytest.raises(EnergyLoopDivergence):
            p_eh(8.0, config)

    def test_negative_z(self):
        with pytest.raises(DomainError):
            p_eh(-0.1, _eh_config())

    def test_cap(self):
        config = _eh_config(p=10)
        onset = cap_onset(config)
        z = np.array([0.5 * onset, 1.01 * onset, 1.0 / config.eh_gain, 8.0])
        recycled, capped = p_eh_capped(z, config)
        cap = EH_CAP_FACTOR * config.p_source_w
        assert list(capped) == [False, True, True, True]
        np.testing.assert_allclose(recycled[1:], cap)
        assert recycled[0] == pytest.approx(p_eh(z[0], config))

    def test_cap_onset_without_antennas(self):
        assert cap_onset(_eh_config(p=0)) == math.inf

    def test_mean_field_total_power(self):
        config = _eh_config()
        p_rf = rf_power_for(config)
        assert mean_field_total_power(config) == pytest.approx(p_rf / (1.0 - config.eh_gain))


class TestRecycledPowerLaw:
    def test_cdf_at_support_end(self):
        config = _eh_config(p=2)
        upper = p_eh_support(config)
        assert math.isfinite(upper)
        assert p_eh_cdf(upper, config) == pytest.approx(1.0, abs=1e-12)

    def test_pdf_integrates_to_cdf(self):
        config = _eh_config(p=2)
        upper = p_eh_support(config)
        half = 0.5 * upper
        total, _ = integrate.quad(lambda p: p_eh_pdf(p, config), 0.0, half)
        assert total == pytest.approx(p_eh_cdf(half, config), rel=1e-8)

    def test_divergent_loop_has_infinite_support(self):
        assert p_eh_support(_eh_config(p=10)) == math.inf

    def test_needs_eh_antennas(self):
        with pytest.raises(DomainError):
            p_eh_pdf(0.1, _eh_config(p=0))


class TestProductLeakage:
    def test_two_by_two_is_log(self):
        # 2F1(1, 1; 2; 1 - w) = -log(w) / (1 - w)
        for w in (0.01, 0.3, 0.9):
            assert product_leakage_pdf(w, 2, 2) == pytest.approx(-math.log(w), rel=1e-12)

    @pytest.mark.parametrize("m, n", [(2, 2), (3, 4), (6, 5)])
    def test_normalized_with_unit_mean(self, m, n):
        total, _ = integrate.quad(lambda w: product_leakage_pdf(w, m, n), 0.0, 1.0, limit=200)
        mean, _ = integrate.quad(lambda q: q * q_pdf(q, m, n), 0.0, m * n, limit=200)
        assert total == pytest.approx(1.0, abs=1e-8)
        assert mean == pytest.approx(1.0, abs=1e-8)

    def test_matches_sampled_product(self):
        m, n = 3, 4
        rng = _rng(11)
        q = sample_leakage(m, rng, 100_000) * sample_leakage(n, rng, 100_000)

        def cdf(x):
            value, _ = integrate.quad(lambda w: product_leakage_pdf(w, m, n), 0.0, x / (m * n))
            return value

        for x in (0.25, 1.0, 3.0):
            assert float(np.mean(q <= x)) == pytest.approx(cdf(x), abs=0.01)

    def test_domain(self):
        with pytest.raises(DomainError):
            q_pdf(12.0, 3, 4)
        with pytest.raises(DomainError):
            product_leakage_pdf(0.5, 1, 4)


class TestGpdFit:
    def test_regular_shape_uses_likelihood(self):
        samples = stats.genpareto.rvs(-0.2, scale=1.5, size=50_000, random_state=3)
        fitted = fit_gpd(samples)
        assert fitted.method == "mle"
        assert fitted.shape == pytest.approx(-0.2, abs=0.02)
        assert fitted.scale == pytest.approx(1.5, rel=0.03)
        assert fitted.location == 0.0

    def test_leakage_ratio_of_four_antennas(self):
        fitted = fit_gpd(sample_leakage(4, _rng(5), 100_000))
        theory = GpdParams.for_antennas(4)
        assert fitted.shape == pytest.approx(theory.shape, abs=0.02)
        assert fitted.scale == pytest.approx(theory.scale, rel=0.02)

    def test_irregular_shape_falls_back_to_moments(self):
        # m = 2 gives xi = -1, where the likelihood is unbounded
        fitted = fit_gpd(sample_leakage(2, _rng(5), 100_000))
        assert fitted.method == "moments"
        assert fitted.shape == pytest.approx(-1.0, abs=0.03)
        assert fitted.scale == pytest.approx(2.0, rel=0.03)

    def test_too_few_samples(self):
        with pytest.raises(DomainError):
            fit_gpd(np.ones(10))

    def test_negative_samples(self):
        with pytest.raises(DomainError):
            fit_gpd(-sample_leakage(4, _rng(), 20_000))
