"""Special functions and noncentral chi-square mixture transforms."""

import math

import numpy as np
import pytest
from scipy import integrate

from misorelay.specfun import (
    MixtureSpec,
    bessel_i0_scaled,
    expx_gamma0,
    gamma0,
    log_mgf_mixture,
    mgf_mixture,
    sample_ncx2,
)

EULER_GAMMA = 0.5772156649015329


def i0_series(x, terms=60):
    """Power series sum_k (x/2)^(2k) / (k!)^2, truncated far past float precision."""
    half = x / 2.0
    total = 0.0
    for k in range(terms):
        total += half ** (2 * k) / math.factorial(k) ** 2
    return total


class TestBesselI0Scaled:
    def test_at_zero(self):
        assert bessel_i0_scaled(0.0) == 1.0

    def test_series_oracle_at_one(self):
        expected = math.exp(-1.0) * i0_series(1.0)
        np.testing.assert_allclose(bessel_i0_scaled(1.0), expected, rtol=1e-14)
        # Frozen value of the series oracle above.
        np.testing.assert_allclose(bessel_i0_scaled(1.0), 0.46575960759364043, rtol=1e-13)

    def test_large_argument_asymptote(self):
        """No overflow at x = 700; leading asymptote 1/sqrt(2 pi x)."""
        value = bessel_i0_scaled(700.0)
        assert np.isfinite(value)
        np.testing.assert_allclose(value, 1.0 / np.sqrt(2.0 * np.pi * 700.0), rtol=1e-3)

    def test_monotone_decreasing(self):
        x = np.geomspace(1e-3, 1e3, 200)
        values = bessel_i0_scaled(x)
        assert np.all(np.diff(values) < 0.0)
        assert np.all(values <= 1.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="bessel_i0_scaled requires x >= 0"):
            bessel_i0_scaled(-1.0)


class TestGamma0:
    def test_tail_bound(self):
        assert gamma0(50.0) <= math.exp(-50.0) / 50.0

    def test_quadrature_oracle_at_one(self):
        oracle, err = integrate.quad(
            lambda t: math.exp(-t) / t, 1.0, np.inf, epsabs=1e-14, epsrel=1e-13
        )
        assert err < 1e-12
        np.testing.assert_allclose(gamma0(1.0), oracle, rtol=1e-10)

    def test_small_argument_expansion(self):
        x = 1e-6
        expansion = -math.log(x) - EULER_GAMMA + x
        np.testing.assert_allclose(gamma0(x), expansion, rtol=1e-6)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="gamma0 requires x > 0"):
            gamma0(0.0)


class TestExpxGamma0:
    def test_asymptotic_oracle_at_1000(self):
        x = 1000.0
        expected = 1.0 / x - 1.0 / x**2 + 2.0 / x**3
        np.testing.assert_allclose(expx_gamma0(x), expected, rtol=1e-6)

    def test_consistency_at_moderate_x(self):
        np.testing.assert_allclose(expx_gamma0(1.0), math.e * gamma0(1.0), rtol=1e-12)

    def test_strictly_decreasing(self):
        assert expx_gamma0(2.0) < expx_gamma0(1.0)
        x = np.geomspace(1e-4, 1e6, 400)
        assert np.all(np.diff(expx_gamma0(x)) < 0.0)

    def test_classical_bounds(self):
        """x * e^x * Gamma(0, x) is pinned inside (x/(x+1), 1) for all x > 0."""
        x = np.geomspace(1e-6, 1e8, 600)
        product = x * expx_gamma0(x)
        assert np.all(product < 1.0)
        assert np.all(product > x / (x + 1.0))

    def test_branches_agree(self):
        """Direct product and asymptotic-series branches match where both work."""
        x = 510.0
        direct = math.exp(x) * gamma0(x)
        np.testing.assert_allclose(expx_gamma0(x), direct, rtol=1e-10)

    def test_vector_input(self):
        x = np.array([0.5, 500.0, 5000.0])
        out = expx_gamma0(x)
        assert out.shape == (3,)
        np.testing.assert_allclose(out[0], expx_gamma0(0.5), rtol=1e-15)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="expx_gamma0 requires x > 0"):
            expx_gamma0(-3.0)


class TestSampleNcx2:
    def test_central_case_mean(self):
        rng = np.random.default_rng(41)
        draws = sample_ncx2(0.0, rng, size=10**6)
        se = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - 1.0) <= 3.0 * se

    def test_reference_noncentrality_mean(self):
        """Mean is 1 + c for the reference value c = 14.3851."""
        rng = np.random.default_rng(43)
        draws = sample_ncx2(14.3851, rng, size=10**6)
        se = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - 15.3851) <= 3.0 * se

    def test_variance_formula(self):
        """Variance is 1 + 2c."""
        rng = np.random.default_rng(47)
        draws = sample_ncx2(5.0, rng, size=10**6)
        dev_sq = (draws - draws.mean()) ** 2
        se = dev_sq.std(ddof=1) / np.sqrt(draws.size)
        assert abs(dev_sq.mean() - 11.0) <= 3.0 * se

    def test_nonnegative_draws(self):
        rng = np.random.default_rng(53)
        assert np.all(sample_ncx2(2.0, rng, size=1000) >= 0.0)

    def test_invalid_noncentrality(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="noncentrality must be finite"):
            sample_ncx2(-1.0, rng)
        with pytest.raises(ValueError, match="noncentrality must be finite"):
            sample_ncx2(np.inf, rng)


class TestMixtureSpec:
    def test_mean(self):
        spec = MixtureSpec([0.25, 0.75], [4.0, 0.0])
        np.testing.assert_allclose(spec.mean(), 0.25 * 5.0 + 0.75, rtol=1e-15)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="weights must sum to 1"):
            MixtureSpec([0.5, 0.6], [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal nonzero length"):
            MixtureSpec([1.0], [0.0, 0.0])

    def test_negative_entries(self):
        with pytest.raises(ValueError, match=">= 0"):
            MixtureSpec([1.5, -0.5], [0.0, 0.0])

    def test_evaluate_dimension_check(self):
        spec = MixtureSpec([0.5, 0.5], [1.0, 0.0])
        with pytest.raises(ValueError, match="draw dimension"):
            spec.evaluate(np.zeros((10, 3), dtype=complex))

    def test_sample_mean_matches(self):
        rng = np.random.default_rng(59)
        spec = MixtureSpec([0.2, 0.3, 0.5], [3.0, 0.0, 1.0])
        draws = spec.sample(rng, 10**6)
        se = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - spec.mean()) <= 3.0 * se


class TestMgfMixture:
    def test_value_at_zero_plus(self):
        spec = MixtureSpec([0.4, 0.6], [2.0, 0.5])
        assert abs(mgf_mixture(spec, 1e-12) - 1.0) <= 1e-9

    def test_single_exponential(self):
        """One unit-weight central component is exponential: MGF 1/(1+s)."""
        spec = MixtureSpec([1.0], [0.0])
        np.testing.assert_allclose(mgf_mixture(spec, 1.0), 0.5, rtol=1e-14)
        s = np.geomspace(0.01, 100, 30)
        np.testing.assert_allclose(mgf_mixture(spec, s), 1.0 / (1.0 + s), rtol=1e-13)

    def test_monte_carlo_oracle(self):
        """Closed form matches the sample mean of e^(-sW) over 10^7 draws."""
        rng = np.random.default_rng(61)
        spec = MixtureSpec([0.5, 0.2, 0.3], [1.3, 0.0, 4.2])
        s = 0.7
        values = np.exp(-s * spec.sample(rng, 10**7))
        se = values.std(ddof=1) / np.sqrt(values.size)
        assert abs(values.mean() - mgf_mixture(spec, s)) <= 3.0 * se

    def test_decreasing_and_convex(self):
        rng = np.random.default_rng(67)
        for _ in range(20):
            m = int(rng.integers(1, 5))
            w = rng.dirichlet(np.ones(m))
            c = rng.uniform(0.0, 5.0, size=m)
            spec = MixtureSpec(w, c)
            s = np.linspace(0.05, 20.0, 200)
            vals = mgf_mixture(spec, s)
            assert np.all(np.diff(vals) < 0.0)
            assert np.all(np.diff(vals, 2) > -1e-12)

    def test_log_identity(self):
        """log MGF equals the term-by-term closed form exactly as written."""
        rng = np.random.default_rng(71)
        for _ in range(50):
            m = int(rng.integers(1, 6))
            w = rng.dirichlet(np.ones(m))
            c = rng.uniform(0.0, 10.0, size=m)
            spec = MixtureSpec(w, c)
            s = float(rng.uniform(1e-3, 1e3))
            expected = -sum(
                np.log1p(w[i] * s) + c[i] * w[i] * s / (1.0 + w[i] * s) for i in range(m)
            )
            np.testing.assert_allclose(log_mgf_mixture(spec, s), expected, rtol=1e-12)

    def test_nonpositive_s_rejected(self):
        spec = MixtureSpec([1.0], [0.0])
        with pytest.raises(ValueError, match="requires x > 0"):
            mgf_mixture(spec, 0.0)
