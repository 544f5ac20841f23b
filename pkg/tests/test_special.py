"""Special functions against scipy references and their domain checks."""

import math

import numpy as np
import pytest
from scipy import special as sp

from sber_outage.core.errors import DomainError
from sber_outage.numerics.special import (
    beta,
    hyp1f1,
    hyp2f1,
    hyp2f1_complement,
    ln_beta,
    ln_gamma,
    regularized_gamma_lower,
    regularized_gamma_upper,
)


class TestIncompleteGamma:
    @pytest.mark.parametrize("a", [1, 2, 4, 16])
    def test_lower_and_upper_sum_to_one(self, a):
        x = np.linspace(0.0, 40.0, 81)
        total = regularized_gamma_lower(a, x) + regularized_gamma_upper(a, x)
        np.testing.assert_allclose(total, 1.0, atol=1e-14)

    def test_scalar_input_gives_float(self):
        assert isinstance(regularized_gamma_lower(3, 1.5), float)

    def test_integer_order_matches_poisson_tail(self):
        # P(m, x) = 1 - e^{-x} sum_{k<m} x^k / k!
        m, x = 4, 2.5
        head = sum(x**k / math.factorial(k) for k in range(m))
        assert regularized_gamma_lower(m, x) == pytest.approx(1.0 - math.exp(-x) * head, rel=1e-13)

    @pytest.mark.parametrize("a, x", [(0, 1.0), (-1, 1.0), (2, -0.1), (2, float("nan"))])
    def test_domain(self, a, x):
        with pytest.raises(DomainError):
            regularized_gamma_lower(a, x)


class TestBetaGamma:
    def test_beta_matches_gamma_ratio(self):
        assert beta(3.0, 5.0) == pytest.approx(math.gamma(3) * math.gamma(5) / math.gamma(8))

    def test_ln_beta_does_not_overflow(self):
        assert ln_beta(400.0, 500.0) == pytest.approx(sp.betaln(400.0, 500.0))

    def test_ln_gamma(self):
        assert ln_gamma(10.0) == pytest.approx(math.log(math.factorial(9)))

    @pytest.mark.parametrize("func, args", [(beta, (0.0, 1.0)), (ln_beta, (1.0, -2.0)), (ln_gamma, (0.0,))])
    def test_domain(self, func, args):
        with pytest.raises(DomainError):
            func(*args)


class TestHyp1f1:
    @pytest.mark.parametrize(
        "a, b, x",
        [(1.0, 2.0, 0.5), (1.0, 4.0, 3.0), (3.0, 10.0, 7.5), (2.0, 17.0, 0.01), (1.0, 5.0, -4.0), (2.0, 6.0, -20.0)],
    )
    def test_matches_scipy(self, a, b, x):
        assert hyp1f1(a, b, x) == pytest.approx(sp.hyp1f1(a, b, x), rel=1e-10)

    def test_zero_argument(self):
        assert hyp1f1(2.0, 3.0, 0.0) == 1.0

    def test_nonpositive_integer_b(self):
        with pytest.raises(DomainError):
            hyp1f1(1.0, -2.0, 1.0)


class TestHyp2f1:
    @pytest.mark.parametrize(
        "a, b, c, x",
        [
            (1.0, 1.0, 2.0, 0.3),
            (3.0, 3.0, 6.0, 0.45),
            (3.0, 5.0, 6.0, -0.4),
            (1.0, 1.0, 2.0, -10.0),
            (7.0, 7.0, 14.0, -3.0),
            (2.0, 3.0, 5.0, 0.9),
        ],
    )
    def test_matches_scipy(self, a, b, c, x):
        assert hyp2f1(a, b, c, x) == pytest.approx(sp.hyp2f1(a, b, c, x), rel=1e-10)

    def test_log_closed_form(self):
        # 2F1(1, 1; 2; x) = -log(1 - x) / x
        for x in (-50.0, -0.5, 0.2, 0.75, 0.99):
            assert hyp2f1(1.0, 1.0, 2.0, x) == pytest.approx(-math.log1p(-x) / x, rel=1e-11)

    def test_unsupported_pattern(self):
        with pytest.raises(DomainError):
            hyp2f1(1.0, 1.0, 3.0, 0.9)

    @pytest.mark.parametrize("x", [1.0, 1.5])
    def test_outside_unit_disk(self, x):
        with pytest.raises(DomainError):
            hyp2f1(1.0, 1.0, 2.0, x)

    def test_nonpositive_integer_c(self):
        with pytest.raises(DomainError):
            hyp2f1(1.0, 1.0, 0.0, 0.1)


class TestHyp2f1Complement:
    @pytest.mark.parametrize("a, b", [(1.0, 1.0), (3.0, 2.0), (7.0, 7.0), (15.0, 1.0)])
    @pytest.mark.parametrize("w", [1.0, 0.7, 0.3, 1e-2, 1e-6])
    def test_matches_scipy(self, a, b, w):
        expected = sp.hyp2f1(a, b, a + b, 1.0 - w)
        assert hyp2f1_complement(a, b, w) == pytest.approx(expected, rel=1e-8)

    def test_log_w_beyond_underflow(self):
        # 2F1(1, 1; 2; 1 - w) = -log(w) / (1 - w) -> -log(w) as w -> 0
        log_w = -2000.0
        assert hyp2f1_complement(1.0, 1.0, 0.0, log_w=log_w) == pytest.approx(2000.0, rel=1e-12)

    def test_symmetric_in_a_b(self):
        assert hyp2f1_complement(2.0, 5.0, 0.05) == pytest.approx(hyp2f1_complement(5.0, 2.0, 0.05), rel=1e-12)

    @pytest.mark.parametrize("a, b, w", [(0.0, 1.0, 0.5), (1.0, 1.0, 0.0), (1.0, 1.0, 1.5)])
    def test_domain(self, a, b, w):
        with pytest.raises(DomainError):
            hyp2f1_complement(a, b, w)
