import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from eden.errors import DomainError
from eden.params import (
    QUANTILE,
    SecurityModel,
    feasibility,
    normal_cdf,
    tail_report,
    tau_min,
    tau_min_bound,
    theta_max_honest,
    theta_min_adversary,
)

from .oracles import binomial_tail_below


def test_quantile_matches_a_1e10_tail():
    assert stats.norm.sf(QUANTILE) == pytest.approx(1e-10, rel=0.1)


@given(st.floats(-37, 37))
def test_normal_cdf_matches_scipy(z):
    assert normal_cdf(z) == pytest.approx(stats.norm.cdf(z), rel=1e-12, abs=1e-300)


def test_normal_cdf_saturates():
    assert normal_cdf(-50) == 0.0 and normal_cdf(50) == 1.0


class TestThetaMax:
    def test_operating_point_clears_threshold(self):
        value = theta_max_honest(SecurityModel(0.75, 0.53, 5000))
        assert value > 0.3
        assert value == pytest.approx(0.3408, abs=5e-4)

    def test_large_tau_limit(self):
        assert theta_max_honest(SecurityModel(0.75, 0.6, 10**12, K=10**15)) == pytest.approx(0.45, abs=1e-4)

    def test_variance_factor_only_loosens(self):
        m = SecurityModel(0.75, 0.6, 5000)
        assert theta_max_honest(m, with_variance_factor=True) > theta_max_honest(m)


class TestThetaMin:
    def test_full_activity_golden(self):
        value = theta_min_adversary(SecurityModel(0.75, 1.0, 5000))
        assert value == pytest.approx(0.25 + 3.18 / math.sqrt(5000), abs=1e-12)
        assert value == pytest.approx(0.2950, abs=5e-4)

    def test_closed_form(self):
        value = theta_min_adversary(SecurityModel(0.75, 0.6, 5000))
        assert value == pytest.approx(0.15 + 6.36 * math.sqrt(0.15 / 5000), rel=1e-12)

    def test_no_adversary(self):
        assert theta_min_adversary(SecurityModel(1.0, 0.7, 5000)) == 0


class TestTauMin:
    def test_golden(self):
        assert tau_min(0.75, 1.0) == 1134
        assert tau_min(0.75, 0.5) == 2268
        assert tau_min_bound(0.75, 1.0) == Fraction(1134)

    def test_scales_inversely_with_alpha(self):
        for alpha in (0.25, 0.5, 0.8, 1.0):
            assert tau_min_bound(0.75, alpha) == tau_min_bound(0.75, 1.0) / Fraction(repr(alpha))

    def test_diverges_towards_two_thirds(self):
        grid = [Fraction(2, 3) + Fraction(1, 10**k) for k in range(1, 8)]
        values = [tau_min_bound(h, 1) for h in grid]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] > 10**14

    @pytest.mark.parametrize("h", [0.6, 2 / 3, 1.01])
    def test_domain(self, h):
        with pytest.raises(DomainError):
            tau_min(h, 1.0)


class TestTailReport:
    def test_operating_point_bounds(self):
        r = tail_report(SecurityModel(0.75, 0.6, 5000, 0.3))
        assert r.p_honest_shortfall < 1e-10
        assert r.p_adversary_reach < 1e-10
        assert r.approximation_valid and not r.warnings

    def test_no_adversary(self):
        r = tail_report(SecurityModel(1.0, 1.0, 5000, 0.3))
        assert r.mu_a == 0 and r.p_adversary_reach == 0

    def test_small_tau_matches_exact_binomial(self):
        K = 1000
        model = SecurityModel(0.8, 0.7, 100, 0.3, K)
        r = tail_report(model)
        s_h = round(0.8 * 0.7 * K)
        exact = float(binomial_tail_below(30, s_h, Fraction(100, K)))
        assert abs(r.p_honest_shortfall - exact) < 0.01

    def test_warning_outside_validity(self):
        r = tail_report(SecurityModel(0.95, 0.5, 100, 0.3, 10**9))
        assert not r.approximation_valid
        assert any("validity" in w for w in r.warnings)

    def test_needs_theta(self):
        with pytest.raises(DomainError):
            tail_report(SecurityModel(0.75, 1.0, 5000))

    def test_to_dict(self):
        d = tail_report(SecurityModel(0.75, 0.6, 5000, 0.3)).to_dict()
        assert isinstance(d["warnings"], list) and "p_honest_shortfall" in d


class TestFeasibility:
    def test_operating_point(self):
        assert feasibility(SecurityModel(0.75, 0.54, 5000, 0.3)).feasible

    def test_low_activity(self):
        f = feasibility(SecurityModel(0.75, 0.30, 5000, 0.3))
        assert not f.feasible and f.honest_margin < 0

    def test_theta_at_honest_share(self):
        assert not feasibility(SecurityModel(0.75, 0.8, 5000, 0.6)).feasible

    def test_tau_below_minimum(self):
        # theta sits inside its interval, only tau is short of 1134
        f = feasibility(SecurityModel(0.75, 1.0, 1000, 0.45))
        assert f.honest_margin > 0 and f.adversary_margin > 0
        assert f.tau_margin < 0 and not f.feasible

    def test_boundary_in_alpha(self):
        # honest margin changes sign between these two activity levels
        assert feasibility(SecurityModel(0.75, 0.48, 5000, 0.3)).feasible
        assert not feasibility(SecurityModel(0.75, 0.46, 5000, 0.3)).feasible


class TestModelValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(h=0.6, alpha=1, tau=10),
            dict(h=0.8, alpha=0, tau=10),
            dict(h=0.8, alpha=1, tau=0),
            dict(h=0.8, alpha=1, tau=10, theta=1.0),
            dict(h=0.8, alpha=1, tau=10, K=10),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(DomainError):
            SecurityModel(**kwargs)
