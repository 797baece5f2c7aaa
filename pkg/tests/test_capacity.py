"""Rate estimators: the two integrand forms, the Monte Carlo estimator, the
large-relay-gain benchmark, and the paired covariance comparisons."""

import numpy as np
import pytest

from misorelay.capacity import (
    CapacityEstimate,
    amplifier_gain,
    conditional_capacity_pair,
    estimate_capacity,
    estimate_capacity_limit,
    integrand_meanfeedback,
    integrand_raw,
    paired_capacity_comparison,
)
from misorelay.channel import (
    ChannelMeanModel,
    FadingDistribution,
    LinkParams,
    SourceCovariance,
    complete_orthonormal_basis,
    complex_gaussian,
    quadratic_form,
)
from misorelay.optimizer import build_q_opt
from misorelay.stochastic_order import (
    ComparisonInstance,
    counterexample_instance,
    random_comparison_instance,
)

FIG1_MU = np.array([0.3518 + 0.2496j, -0.4039 - 1.0437j])
FIG1_MODEL = ChannelMeanModel(FIG1_MU, 0.1)
FIG1_PARAMS = LinkParams.from_db(10.0, 15.0)
RAYLEIGH = FadingDistribution.rayleigh()

# Reference value produced by estimate_capacity itself at n = 10^7
# (seed 20260814, beamforming covariance, gamma = 10 dB, relay budget 15 dB);
# frozen as a regression anchor for cheaper reruns.
ANCHOR_MEAN = 1.0246710785298425
ANCHOR_SE = 9.957910199625347e-05


def random_covariance_matrix(rng, m):
    a = complex_gaussian(rng, (m, m))
    q = a @ a.conj().T
    return q / np.trace(q).real


def model_for(inst: ComparisonInstance) -> ChannelMeanModel:
    """Channel model whose mean is the instance's own eigenbasis coordinates."""
    return ChannelMeanModel(inst.beta, inst.alpha)


class TestAmplifierGain:
    def test_degenerate_noiseless(self):
        model = ChannelMeanModel(np.zeros(2, dtype=complex), 0.0)
        params = LinkParams(3.0, 7.0)
        np.testing.assert_allclose(
            amplifier_gain(SourceCovariance.isotropic(2), model, params),
            np.sqrt(7.0),
            rtol=1e-14,
        )

    def test_direct_substitution(self):
        model = ChannelMeanModel(np.zeros(2, dtype=complex), 1.0)
        params = LinkParams(1.0, 1.0)
        np.testing.assert_allclose(
            amplifier_gain(SourceCovariance.isotropic(2), model, params),
            np.sqrt(0.5),
            rtol=1e-14,
        )

    def test_power_budget_residual(self):
        """eta^2 (1 + gamma [mu^H Q mu + alpha]) recovers the relay budget."""
        q = build_q_opt(FIG1_MODEL, 1.0)
        eta = amplifier_gain(q, FIG1_MODEL, FIG1_PARAMS)
        lhs = eta**2 * (
            1.0 + FIG1_PARAMS.gamma * (FIG1_MODEL.mu_norm_sq + FIG1_MODEL.alpha)
        )
        np.testing.assert_allclose(lhs, FIG1_PARAMS.g_relay, rtol=1e-12)


class TestIntegrandForms:
    def test_orthogonal_mean_direction(self):
        """Rank-one covariance and a perpendicular channel draw give zero rate."""
        model = ChannelMeanModel(np.array([1.0 + 0j, 0.0]), 0.5)
        q = build_q_opt(model, 1.0)
        h_perp = np.array([0.0, 1.0 + 0j])
        assert integrand_raw(h_perp, 1.0 + 0j, q, model, FIG1_PARAMS) == 0.0
        assert integrand_meanfeedback(h_perp, 1.0 + 0j, q, model, FIG1_PARAMS) == 0.0

    def test_dead_forward_link(self):
        rng = np.random.default_rng(5)
        q = random_covariance_matrix(rng, 2)
        h_b = complex_gaussian(rng, (2,))
        assert integrand_raw(h_b, 0.0, q, FIG1_MODEL, FIG1_PARAMS) == 0.0
        assert integrand_meanfeedback(h_b, 0.0, q, FIG1_MODEL, FIG1_PARAMS) == 0.0

    def test_pointwise_identity(self):
        """Raw and reduced forms agree to 1e-12 relative on random tuples."""
        rng = np.random.default_rng(73)
        for _ in range(200):
            m = int(rng.integers(2, 6))
            model = ChannelMeanModel(complex_gaussian(rng, (m,)), float(rng.uniform(0.0, 2.0)))
            params = LinkParams(float(rng.uniform(0.05, 50.0)), float(rng.uniform(0.2, 200.0)))
            q = random_covariance_matrix(rng, m)
            h_b = complex_gaussian(rng, (10, m))
            h_f = complex_gaussian(rng, (10,))
            raw = integrand_raw(h_b, h_f, q, model, params)
            reduced = integrand_meanfeedback(h_b, h_f, q, model, params)
            np.testing.assert_allclose(raw, reduced, rtol=1e-12)

    def test_arithmetic_case(self):
        """G|h_F|^2 = 10 with unit quadratic form and unit floor: log(1 + 10/12)."""
        model = ChannelMeanModel(np.array([0.0, 1.0 + 0j]), 1.0)
        params = LinkParams(1.0, 10.0)
        q = np.diag([1.0, 0.0]).astype(complex)
        h_b = np.array([1.0 + 0j, 0.0])
        value = integrand_meanfeedback(h_b, 1.0 + 0j, q, model, params)
        np.testing.assert_allclose(value, np.log1p(10.0 / 12.0), rtol=1e-14)
        np.testing.assert_allclose(
            integrand_raw(h_b, 1.0 + 0j, q, model, params), value, rtol=1e-13
        )

    def test_high_snr_floor(self):
        """As gamma grows the floor tends to mu^H Q mu + alpha."""
        rng = np.random.default_rng(79)
        q = random_covariance_matrix(rng, 2)
        h_b = complex_gaussian(rng, (2,))
        params = LinkParams(1e12, 10.0)
        value = integrand_meanfeedback(h_b, 1.0 + 0j, q, FIG1_MODEL, params)
        floor = quadratic_form(FIG1_MODEL.mu, q) + FIG1_MODEL.alpha
        limit = np.log1p(10.0 * quadratic_form(h_b, q) / floor)
        np.testing.assert_allclose(value, limit, rtol=1e-8)

    def test_trace_requirement(self):
        """A two-unit-power matrix is rejected on its way into the reduced
        form (the covariance layer screens it before the integrand's own
        trace guard)."""
        h_b = np.array([1.0 + 0j, 0.0])
        with pytest.raises(ValueError, match=r"trace != 1"):
            integrand_meanfeedback(h_b, 1.0, np.eye(2), FIG1_MODEL, FIG1_PARAMS)


class TestEstimateCapacity:
    def test_dead_forward_channel(self):
        est = estimate_capacity(
            SourceCovariance.isotropic(2), FIG1_MODEL, FIG1_PARAMS,
            FadingDistribution.constant(0.0), n=10**4, seed=1,
        )
        assert est.mean == 0.0
        assert est.std_error == 0.0

    def test_isotropic_rebasis_bit_identical(self):
        """With mu = 0 a unitary re-basis of I/M changes nothing, bit for bit."""
        model = ChannelMeanModel(np.zeros(2, dtype=complex), 1.0)
        u = complete_orthonormal_basis(np.array([0.6 + 0.3j, -0.2 + 0.7j]))
        q_iso = SourceCovariance.isotropic(2)
        q_rot = SourceCovariance.from_eigen(u, np.full(2, 0.5))
        a = estimate_capacity(q_iso, model, FIG1_PARAMS, RAYLEIGH, n=10**4, seed=9)
        b = estimate_capacity(q_rot, model, FIG1_PARAMS, RAYLEIGH, n=10**4, seed=9)
        assert a == b

    def test_regression_anchor(self):
        """Fresh medium-n run agrees with the frozen high-n reference."""
        est = estimate_capacity(
            build_q_opt(FIG1_MODEL, 1.0), FIG1_MODEL, FIG1_PARAMS, RAYLEIGH,
            n=2 * 10**5, seed=3,
        )
        tol = 3.0 * np.hypot(est.std_error, ANCHOR_SE)
        assert abs(est.mean - ANCHOR_MEAN) <= tol

    def test_deterministic_rerun(self):
        q = build_q_opt(FIG1_MODEL, 0.8)
        a = estimate_capacity(q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=5000, seed=21)
        b = estimate_capacity(q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=5000, seed=21)
        assert a == b

    def test_worker_split_determinism(self):
        q = build_q_opt(FIG1_MODEL, 0.8)
        single = estimate_capacity(q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=30000, seed=5)
        split_a = estimate_capacity(
            q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=30000, seed=5, workers=3
        )
        split_b = estimate_capacity(
            q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=30000, seed=5, workers=3
        )
        assert split_a == split_b
        assert split_a.workers == 3
        # Different stream layout, same quantity: statistical agreement only.
        assert abs(split_a.mean - single.mean) <= 3.0 * np.hypot(
            split_a.std_error, single.std_error
        )

    def test_monotone_in_gamma(self):
        """Same seed means shared draws, so the rate grows pointwise in gamma."""
        q = build_q_opt(FIG1_MODEL, 0.9)
        means = [
            estimate_capacity(
                q, FIG1_MODEL, LinkParams(g, FIG1_PARAMS.g_relay), RAYLEIGH,
                n=20000, seed=13,
            ).mean
            for g in (0.5, 2.0, 8.0, 32.0)
        ]
        assert np.all(np.diff(means) > 0.0)

    def test_monotone_in_relay_budget(self):
        q = build_q_opt(FIG1_MODEL, 0.9)
        means = [
            estimate_capacity(
                q, FIG1_MODEL, LinkParams(10.0, g_relay), RAYLEIGH, n=20000, seed=13
            ).mean
            for g_relay in (1.0, 4.0, 16.0, 64.0)
        ]
        assert np.all(np.diff(means) > 0.0)

    def test_matrix_and_eigen_paths_agree(self):
        """Dense-matrix sampling and reduced-frame sampling estimate the same rate."""
        q_eigen = build_q_opt(FIG1_MODEL, 0.7)
        q_dense = SourceCovariance.from_matrix(q_eigen.matrix)
        a = estimate_capacity(q_eigen, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=10**5, seed=2)
        b = estimate_capacity(q_dense, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=10**5, seed=4)
        assert abs(a.mean - b.mean) <= 3.0 * np.hypot(a.std_error, b.std_error)

    def test_validation_errors(self):
        q = SourceCovariance.isotropic(2)
        with pytest.raises(ValueError, match="at least two samples"):
            estimate_capacity(q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=1)
        with pytest.raises(ValueError, match="workers must satisfy"):
            estimate_capacity(q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=100, workers=0)
        with pytest.raises(ValueError, match="does not match the channel mean"):
            estimate_capacity(
                SourceCovariance.isotropic(3), FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=100
            )

    def test_json_provenance(self):
        est = CapacityEstimate(0.5, 0.01, 1000, 42, workers=2)
        payload = est.to_json_dict()
        assert payload == {
            "mean": 0.5, "std_error": 0.01, "n_samples": 1000, "seed": 42, "workers": 2
        }


class TestEstimateCapacityLimit:
    def test_zero_scatter_closed_form(self):
        model = ChannelMeanModel(FIG1_MU, 0.0)
        q = build_q_opt(model, 1.0)
        est = estimate_capacity_limit(q, model, LinkParams(10.0, 1.0), n=100, seed=0)
        np.testing.assert_allclose(
            est.mean, 0.5 * np.log1p(10.0 * model.mu_norm_sq), rtol=1e-14
        )
        assert est.std_error == 0.0

    def test_large_budget_convergence(self):
        """The relay estimator approaches the single-hop benchmark as G grows."""
        q = build_q_opt(FIG1_MODEL, 1.0)
        params = LinkParams(10.0, 10**6)
        relay = estimate_capacity(q, FIG1_MODEL, params, RAYLEIGH, n=10**5, seed=31)
        direct = estimate_capacity_limit(q, FIG1_MODEL, params, n=10**5, seed=77)
        assert abs(relay.mean - direct.mean) <= 3.0 * np.hypot(
            relay.std_error, direct.std_error
        )

    def test_upper_bounds_finite_budget(self):
        """Any finite relay budget stays below the infinite-budget benchmark."""
        q = build_q_opt(FIG1_MODEL, 1.0)
        finite = estimate_capacity(q, FIG1_MODEL, FIG1_PARAMS, RAYLEIGH, n=10**5, seed=8)
        limit = estimate_capacity_limit(q, FIG1_MODEL, FIG1_PARAMS, n=10**5, seed=8)
        assert finite.mean < limit.mean


class TestConditionalCapacityPair:
    def test_scale_factors_match(self):
        """The matched power split equalizes the two scale factors to 1e-12."""
        rng = np.random.default_rng(83)
        for _ in range(50):
            inst = random_comparison_instance(rng)
            pair = conditional_capacity_pair(
                inst, model_for(inst), FIG1_PARAMS, 1.0 + 0.5j, n=100, seed=0
            )
            assert abs(pair.k1 - pair.k2) <= 1e-12

    def test_uniform_spectrum_coincides(self):
        """Uniform lam makes the two mixtures equal in law."""
        rng = np.random.default_rng(89)
        beta = complex_gaussian(rng, (3,))
        inst = ComparisonInstance.matched(np.full(3, 1 / 3), beta, 0.8)
        pair = conditional_capacity_pair(
            inst, model_for(inst), FIG1_PARAMS, 0.9 + 0.1j, n=10**5, seed=7
        )
        assert abs(pair.diff_mean) <= 3.0 * np.hypot(pair.se1, pair.se2)

    def test_dominance_bulk(self):
        """The aligned competitor never loses beyond pooled noise."""
        rng = np.random.default_rng(97)
        for _ in range(50):
            inst = random_comparison_instance(rng)
            h_f = complex(complex_gaussian(rng, ()))
            pair = conditional_capacity_pair(
                inst, model_for(inst), FIG1_PARAMS, h_f, n=2 * 10**4, seed=11
            )
            pooled = np.hypot(pair.se1, pair.se2)
            assert pair.mean2 >= pair.mean1 - 3.0 * pooled

    def test_mismatched_split_rejected(self):
        inst = counterexample_instance()
        with pytest.raises(ValueError, match="scale factors differ"):
            conditional_capacity_pair(
                inst, model_for(inst), FIG1_PARAMS, 1.0, n=100, seed=0
            )

    def test_model_consistency_checks(self):
        rng = np.random.default_rng(7)
        inst = random_comparison_instance(rng, m=2)
        bad_alpha = ChannelMeanModel(inst.beta, inst.alpha + 0.5)
        with pytest.raises(ValueError, match="disagree on alpha"):
            conditional_capacity_pair(inst, bad_alpha, FIG1_PARAMS, 1.0, n=100)
        bad_mean = ChannelMeanModel(2.0 * inst.beta, inst.alpha)
        with pytest.raises(ValueError, match="disagree on the mean energy"):
            conditional_capacity_pair(inst, bad_mean, FIG1_PARAMS, 1.0, n=100)


class TestPairedCapacityComparison:
    def test_dominance_and_pooling(self):
        rng = np.random.default_rng(193)
        for _ in range(10):
            inst = random_comparison_instance(rng, m=2)
            result = paired_capacity_comparison(
                inst, model_for(inst), FIG1_PARAMS, RAYLEIGH, n=2 * 10**4, seed=5
            )
            assert result.est2.mean >= result.est1.mean - 3.0 * result.pooled_se
            np.testing.assert_allclose(
                result.pooled_se,
                np.hypot(result.est1.std_error, result.est2.std_error),
                rtol=1e-14,
            )

    def test_matches_generic_estimator(self):
        """The mixture-form rate equals the generic estimator's on the same Q."""
        rng = np.random.default_rng(199)
        inst = random_comparison_instance(rng, m=3)
        model = model_for(inst)
        result = paired_capacity_comparison(
            inst, model, FIG1_PARAMS, RAYLEIGH, n=10**5, seed=15
        )
        q1 = SourceCovariance.from_eigen(np.eye(3, dtype=complex), inst.lam)
        direct = estimate_capacity(q1, model, FIG1_PARAMS, RAYLEIGH, n=10**5, seed=16)
        tol = 3.0 * np.hypot(result.est1.std_error, direct.std_error)
        assert abs(result.est1.mean - direct.mean) <= tol

    def test_requires_scatter(self):
        inst = ComparisonInstance.matched([0.5, 0.5], [1.0, 0.0], 0.0)
        model = ChannelMeanModel(np.array([1.0 + 0j, 0.0]), 0.0)
        with pytest.raises(ValueError, match="paired comparison requires alpha > 0"):
            paired_capacity_comparison(inst, model, FIG1_PARAMS, RAYLEIGH, n=100)
