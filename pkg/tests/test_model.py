import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from repssd.errors import DomainError
from repssd.model import (DesignPrior, EffectEstimate, GroupSummary, InitialPrior,
                          conditional_design_prior, design_prior,
                          empirical_bayes_variance, n_to_se, point_null_design_prior,
                          predictive, se_to_n, shrinkage_prior, smd_from_groups,
                          tau_absolute, tau_relative, update_with_pilot)

import oracles

estimates = st.floats(-2, 2)
ses = st.floats(0.01, 1)
taus = st.floats(0, 0.5)
prior_sds = st.floats(0, 3)


class TestEffectEstimate:
    def test_accessors(self, labels):
        assert labels.z == pytest.approx(4.01961, abs=1e-5)
        assert labels.p_one_sided == pytest.approx(oracles.ncdf(-labels.z), rel=1e-10)
        r = labels.reflected()
        assert (r.estimate, r.se) == (-0.205, 0.051)

    @pytest.mark.parametrize("est,se", [(0.1, 0.0), (0.1, -1.0), (math.nan, 0.1),
                                        (0.1, math.inf)])
    def test_invalid(self, est, se):
        with pytest.raises(DomainError):
            EffectEstimate(est, se)

    def test_group_invariants(self):
        with pytest.raises(DomainError):
            GroupSummary(0, 0, 0.0, 1, 10, 10)
        with pytest.raises(DomainError):
            GroupSummary(0, 0, 1, 1, 1, 10)


class TestInitialPrior:
    def test_kinds(self):
        assert InitialPrior.flat().is_flat
        assert InitialPrior.flat().variance == math.inf
        p = InitialPrior.normal(0.1, 0.04)
        assert not p.is_flat and p.describe() == "N(mean = 0.1, sd = 0.2)"
        with pytest.raises(DomainError):
            InitialPrior("flat", 0.0, 1.0)
        with pytest.raises(DomainError):
            InitialPrior.normal(0.0, math.inf)
        with pytest.raises(DomainError):
            InitialPrior.normal(0.0, -1.0)
        with pytest.raises(DomainError):
            InitialPrior("uniform")


class TestDesignPrior:
    def test_labels_flat_with_heterogeneity(self, labels):
        dp = design_prior(labels, tau2=0.05 ** 2)
        assert dp.mean == 0.205
        assert dp.sd == pytest.approx(0.071, abs=0.001)
        assert dp.g == math.inf and dp.shrinkage == 1.0

    def test_labels_flat_no_heterogeneity(self, labels):
        dp = design_prior(labels)
        assert (dp.mean, dp.sd) == (0.205, pytest.approx(0.051, abs=1e-15))

    def test_against_numerical_posterior(self, labels):
        for tau2, mu, var in [(0.0025, 0.0, 0.036924), (0.0, 0.1, 0.01), (0.01, -0.2, 0.5)]:
            dp = design_prior(labels, InitialPrior.normal(mu, var), tau2)
            m, v = oracles.posterior_moments(labels.estimate, labels.se, tau2, mu, var)
            assert dp.mean == pytest.approx(m, abs=1e-10)
            assert dp.variance == pytest.approx(v, rel=1e-8)

    def test_eb_shrinkage_on_mean_and_variance(self, labels):
        tau2 = 0.05 ** 2
        dp = design_prior(labels, shrinkage_prior(labels, tau2), tau2)
        flat = design_prior(labels, tau2=tau2)
        assert dp.g == pytest.approx(0.036924 / 0.005101, rel=1e-12)
        assert 1 - dp.mean / flat.mean == pytest.approx(0.12, abs=0.005)
        assert 1 - dp.variance / flat.variance == pytest.approx(0.12, abs=0.005)
        # the standard deviation shrinks by 1 - sqrt(1 - 0.12), about 6%
        assert 1 - dp.sd / flat.sd == pytest.approx(0.0627, abs=5e-4)

    def test_negative_tau2(self, labels):
        with pytest.raises(DomainError):
            design_prior(labels, tau2=-0.1)

    def test_point_priors(self, labels):
        cond = conditional_design_prior(labels)
        assert (cond.mean, cond.variance, cond.tau2) == (0.205, 0.0, 0.0)
        null = point_null_design_prior(labels)
        assert (null.mean, null.variance) == (0.0, 0.0)
        pred = predictive(cond, 0.07)
        assert (pred.mean, pred.sd) == (0.205, pytest.approx(0.07, rel=1e-15))

    @given(estimates, ses, taus, st.floats(-1, 1), prior_sds)
    def test_mean_is_convex_combination(self, est, se, tau, mu, psd):
        dp = design_prior(EffectEstimate(est, se), InitialPrior.normal(mu, psd ** 2), tau ** 2)
        lo, hi = min(est, mu), max(est, mu)
        assert lo - 1e-12 <= dp.mean <= hi + 1e-12
        assert dp.variance <= se ** 2 + tau ** 2 + 1e-15

    @given(estimates, ses, taus, st.floats(0.01, 3), st.floats(0.01, 3))
    def test_variance_increasing_in_g_and_tau(self, est, se, tau, s1, s2):
        o = EffectEstimate(est, se)
        a, b = sorted((s1, s2))
        va = design_prior(o, InitialPrior.normal(0, a * a), tau * tau).variance
        vb = design_prior(o, InitialPrior.normal(0, b * b), tau * tau).variance
        assert va <= vb + 1e-15
        v_more_tau = design_prior(o, InitialPrior.normal(0, a * a), tau * tau + 0.01).variance
        assert v_more_tau >= va

    @given(estimates, ses, taus, prior_sds)
    def test_shrinkage_toward_zero(self, est, se, tau, psd):
        dp = design_prior(EffectEstimate(est, se), InitialPrior.normal(0, psd ** 2), tau ** 2)
        assert abs(dp.mean) <= abs(est) + 1e-15
        flat = design_prior(EffectEstimate(est, se), tau2=tau ** 2)
        assert flat.mean == est


class TestEmpiricalBayes:
    def test_examples(self, labels):
        assert empirical_bayes_variance(labels, 0.0, 0.05 ** 2) == pytest.approx(0.036924, abs=1e-6)
        assert empirical_bayes_variance(EffectEstimate(0.0, 0.1)) == 0.0
        assert empirical_bayes_variance(EffectEstimate(0.1, 0.2)) == 0.0

    @given(st.floats(0.2, 1.0), st.floats(0.01, 0.1), st.floats(0.01, 0.1))
    def test_g_decreasing_in_se(self, est, s1, s2):
        a, b = sorted((s1, s2))
        ga = design_prior(EffectEstimate(est, a), shrinkage_prior(EffectEstimate(est, a))).g
        gb = design_prior(EffectEstimate(est, b), shrinkage_prior(EffectEstimate(est, b))).g
        assert ga >= gb


class TestPilot:
    def test_flat_update(self):
        p = update_with_pilot(EffectEstimate(0.195, 0.052))
        assert (p.kind, p.mean, p.variance) == ("normal", 0.195, 0.052 ** 2)
        p0 = update_with_pilot(EffectEstimate(0.0, 0.3))
        assert (p0.mean, p0.variance) == (0.0, 0.09)

    def test_precisions_add(self, labels):
        prior = update_with_pilot(EffectEstimate(0.195, 0.052))
        dp = design_prior(labels, prior, 0.0)
        assert dp.variance == pytest.approx(1 / (1 / 0.051 ** 2 + 1 / 0.052 ** 2), abs=1e-8)
        expected = (0.205 / 0.051 ** 2 + 0.195 / 0.052 ** 2) / (1 / 0.051 ** 2 + 1 / 0.052 ** 2)
        assert dp.mean == pytest.approx(expected, abs=1e-12)

    def test_normal_prior_update(self):
        p = update_with_pilot(EffectEstimate(0.3, 0.1), InitialPrior.normal(0.1, 0.01))
        assert p.mean == pytest.approx(0.2) and p.variance == pytest.approx(0.005)
        assert update_with_pilot(EffectEstimate(0.3, 0.1), InitialPrior.normal(0.1, 0.0)).mean == 0.1


class TestHeterogeneity:
    def test_absolute(self):
        assert tau_absolute(0.2) == pytest.approx(0.05102, abs=1e-5)
        assert tau_absolute(0.4) == pytest.approx(0.10204, abs=1e-5)
        assert tau_absolute(0.0) == 0.0
        assert tau_absolute(0.2, coverage=0.95) == pytest.approx(
            0.2 / (2 * oracles.nquantile(0.975)), rel=1e-14)
        assert tau_absolute(0.2, coverage=0.5) == pytest.approx(
            0.2 / (2 * oracles.nquantile(0.75)), rel=1e-14)
        with pytest.raises(DomainError):
            tau_absolute(-0.1)

    def test_relative(self):
        for s in (0.051 ** 2, 0.01, 1.0, 0.3):
            assert tau_relative(0.4, s) == 2 * s / 3
            assert tau_relative(0.5, s) == s
            assert tau_relative(0.0, s) == 0.0
        for bad in (1.0, 1.2, -0.1):
            with pytest.raises(DomainError):
                tau_relative(bad, 0.01)
        with pytest.raises(DomainError):
            tau_relative(0.4, 0.0)


class TestPredictive:
    def test_labels(self, labels):
        dp = design_prior(labels, tau2=0.05 ** 2)
        # sqrt(0.0593^2 + 0.05^2 + 0.051^2 + 0.05^2) evaluated directly
        assert predictive(dp, 0.0593).sd == pytest.approx(0.1054395, abs=1e-7)
        assert predictive(dp, 0.0).variance == pytest.approx(dp.limit_variance, rel=1e-15)
        with pytest.raises(DomainError):
            predictive(dp, -0.1)

    @given(ses, taus, st.floats(0.001, 1), st.floats(0.001, 1))
    def test_sd_increasing_in_sr(self, se, tau, a, b):
        dp = design_prior(EffectEstimate(0.3, se), tau2=tau * tau)
        lo, hi = sorted((a, b))
        assert predictive(dp, lo).sd <= predictive(dp, hi).sd
        assert predictive(dp, lo).sd > math.sqrt(dp.limit_variance) or lo == 0


class TestSMD:
    def test_examples(self):
        e = smd_from_groups(GroupSummary(1.0, 0.0, 1.0, 1.0, 50, 50))
        assert e.estimate == 1.0 and e.se ** 2 == pytest.approx(0.045, abs=1e-15)
        z = smd_from_groups(GroupSummary(2.0, 2.0, 1.0, 3.0, 20, 30))
        assert z.estimate == 0.0 and z.se ** 2 == pytest.approx(50 / 600)
        assert z.n == 50 and z.groups is not None

    def test_pooled_sd(self):
        e = smd_from_groups(GroupSummary(1.0, 0.0, 1.0, 2.0, 11, 21))
        pooled = math.sqrt((10 * 1 + 20 * 4) / 30)
        assert e.estimate == pytest.approx(1 / pooled)

    def test_crude_approximation(self):
        e = smd_from_groups(GroupSummary(0.01, 0.0, 1.0, 1.0, 200, 200))
        assert e.se ** 2 == pytest.approx(4 / 400, rel=1e-3)


class TestSampleSize:
    def test_examples(self):
        assert se_to_n(0.059313975, 2.0) == 1137
        assert se_to_n(2.0, 2.0) == 1
        assert se_to_n(0.2, 2.0) == 100
        assert se_to_n(0.2, 2.0, "ceil") == 100
        assert se_to_n(0.05931, 2.0, "ceil") == 1138
        assert n_to_se(100, 2.0) == 0.2

    def test_invalid(self):
        with pytest.raises(DomainError):
            se_to_n(0.0)
        with pytest.raises(DomainError):
            se_to_n(0.1, -1)
        with pytest.raises(DomainError):
            se_to_n(0.1, 2.0, "floor")
        with pytest.raises(DomainError):
            n_to_se(0.5)

    @given(st.integers(1, 10 ** 6), st.floats(0.5, 5))
    def test_round_trip(self, n, lam):
        assert abs(se_to_n(n_to_se(n, lam), lam) - n) <= 1

    @given(st.integers(2, 10 ** 5), st.integers(2, 10 ** 5))
    def test_c_is_sample_size_ratio(self, no, nr):
        so, sr = n_to_se(no), n_to_se(nr)
        assert so ** 2 / sr ** 2 == pytest.approx(nr / no, rel=1e-12)


def test_design_prior_is_frozen(labels):
    dp = design_prior(labels)
    assert isinstance(dp, DesignPrior)
    with pytest.raises(Exception):
        dp.mean = 1.0
