import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsd import (
    DisagreementPoint,
    DisagreementSource,
    DomainError,
    MarketParams,
    cp_utility,
    disagreement_payoffs,
    excess_profit,
    excess_profit_argmax,
    nbs_solve,
    percent_increase,
    sp_utility,
)
from qsd.bargaining import manifold_ad_utility, manifold_satisfaction
from qsd.dynamics import max_bit_outcome, stable_point_payoffs
from qsd.spne import no_sponsoring_payoff
from qsd.verify import refined_brute_nbs

ZERO_DP = DisagreementPoint(0.0, 0.0, DisagreementSource.STABLE_OUTCOME)


class TestDisagreementPayoffs:
    def test_no_sponsoring_fallback(self, base_params):
        params = base_params.with_(nu2=20.0)
        dp = disagreement_payoffs(params)
        assert dp.d_cp == 0.0
        assert dp.d_sp == pytest.approx(no_sponsoring_payoff(0.0, params), rel=1e-12)
        assert dp.source is DisagreementSource.STABLE_OUTCOME

    def test_min_quality_leaves_cp_empty(self, base_params):
        dp = disagreement_payoffs(base_params)
        assert abs(dp.d_cp) < 1e-9
        assert dp.d_sp > no_sponsoring_payoff(0.0, base_params)

    def test_max_bit_disagreement(self, under_provisioned):
        params = under_provisioned.with_(nu2=0.5, gamma=0.5)
        dp = disagreement_payoffs(params)
        u_cp, u_sp = stable_point_payoffs(max_bit_outcome(params), params)
        assert dp.d_cp == pytest.approx(u_cp, rel=1e-6)
        assert dp.d_sp == pytest.approx(u_sp, rel=1e-6)

    def test_unstable_time_average(self, under_provisioned):
        params = under_provisioned.with_(nu2=0.5, gamma=2.05)
        dp = disagreement_payoffs(params)
        assert dp.source is DisagreementSource.TIME_AVERAGE
        # the 2-cycle alternates sponsoring epochs: averages are finite reals
        assert math.isfinite(dp.d_cp) and math.isfinite(dp.d_sp)


class TestExcessProfit:
    def test_zero_demand_value(self, base_params):
        dp = DisagreementPoint(7.0, 11.0, DisagreementSource.STABLE_OUTCOME)
        expected = base_params.nu2 * base_params.big_d * math.log(
            base_params.kappa_sp * base_params.big_n / base_params.big_d
        ) - 18.0
        assert excess_profit(0.0, base_params, dp) == pytest.approx(expected, rel=1e-12)

    def test_degenerate_weights_leave_only_disagreement(self):
        # formula check only; alpha=0 is outside the validated domain
        params = MarketParams().with_(nu1=0.0, nu2=0.0, alpha=0.0)
        dp = DisagreementPoint(3.0, 4.0, DisagreementSource.STABLE_OUTCOME)
        for d in (0.0, 10.0, 50.0):
            assert excess_profit(d, params, dp) == -7.0

    def test_domain_guard(self, base_params):
        with pytest.raises(DomainError):
            excess_profit(
                base_params.big_n * base_params.kappa_u, base_params, ZERO_DP
            )

    def test_closed_form_argmax_matches_grid(self, base_params):
        # interior case discriminates the FOC formula
        params = base_params.with_(nu2=12.0)
        d_star = excess_profit_argmax(params)
        assert d_star == pytest.approx(60.26156534528218, rel=1e-12)
        ds = np.linspace(0.0, params.n_hat * params.kappa_u, 100_000)
        vals = (
            params.alpha * ds * math.log(params.kappa_cp / params.kappa_u)
            + params.nu1 * ds * math.log(params.kappa_sp / params.kappa_u)
            + params.nu2
            * params.big_d
            * np.log(params.kappa_sp * (params.big_n - ds / params.kappa_u) / params.big_d)
        )
        i = int(np.argmax(vals))
        step = ds[1] - ds[0]
        assert abs(ds[i] - d_star) <= step
        assert excess_profit(d_star, params, ZERO_DP) >= vals[i] - 1e-12

    def test_boundary_clamp(self, base_params):
        # nu2=1 pushes the optimum past n_hat*kappa_u
        assert excess_profit_argmax(base_params) == pytest.approx(
            base_params.n_hat * base_params.kappa_u, rel=1e-12
        )

    def test_concavity(self, base_params):
        hi = base_params.n_hat * base_params.kappa_u
        ds = np.linspace(0.5, hi, 300)
        vals = [excess_profit(float(d), base_params, ZERO_DP) for d in ds]
        for i in range(1, len(ds) - 1):
            second = vals[i - 1] - 2 * vals[i] + vals[i + 1]
            assert second <= 1e-9


class TestNbsSolve:
    def test_threshold_power_zeroes_price(self, base_params):
        dp = disagreement_payoffs(base_params)
        sol = nbs_solve(base_params, 0.5, dp)
        assert sol.agreed
        if 0.0 <= sol.w_threshold <= 1.0:
            at_threshold = nbs_solve(base_params, sol.w_threshold, dp)
            assert abs(at_threshold.p_star) < 1e-9 * max(1.0, abs(at_threshold.u_cp))

    def test_threshold_power_zeroes_price_constructed(self, base_params):
        # pick a disagreement point that puts the threshold inside [0, 1]
        dp = DisagreementPoint(60.0, 200.0, DisagreementSource.STABLE_OUTCOME)
        sol = nbs_solve(base_params, 0.5, dp)
        assert sol.agreed and 0.0 < sol.w_threshold < 1.0
        at_t = nbs_solve(base_params, sol.w_threshold, dp)
        assert abs(at_t.p_star) < 1e-9
        below = nbs_solve(base_params, sol.w_threshold * 0.5, dp)
        above = nbs_solve(base_params, min(1.0, sol.w_threshold * 1.5), dp)
        assert below.p_star > 0 > above.p_star  # money flow reverses

    def test_full_power_cp_takes_everything(self, base_params):
        dp = disagreement_payoffs(base_params)
        sol = nbs_solve(base_params, 1.0, dp)
        assert sol.agreed
        assert sol.u_sp == pytest.approx(dp.d_sp, rel=1e-12)
        assert sol.u_cp == pytest.approx(dp.d_cp + sol.u_excess, rel=1e-12)

    def test_matches_two_dimensional_grid(self, base_params):
        dp = disagreement_payoffs(base_params)
        sol = nbs_solve(base_params, 0.5, dp)
        brute = refined_brute_nbs(base_params, 0.5, dp)
        assert brute.agreed
        d_step = base_params.n_hat * base_params.kappa_u / 499
        assert abs(brute.d - sol.d_star) <= d_step
        assert brute.p == pytest.approx(sol.p_star, rel=1e-3)

    def test_price_decreasing_in_power(self, base_params):
        dp = disagreement_payoffs(base_params)
        ws = np.linspace(0.05, 0.95, 10)
        prices = [nbs_solve(base_params, float(w), dp).p_star for w in ws]
        assert all(p1 > p2 for p1, p2 in zip(prices, prices[1:]))

    def test_rejects_power_outside_unit_interval(self, base_params):
        with pytest.raises(DomainError):
            nbs_solve(base_params, 1.2, ZERO_DP)

    def test_hopeless_disagreement_blocks_agreement(self, base_params):
        dp = DisagreementPoint(1e6, 1e6, DisagreementSource.STABLE_OUTCOME)
        sol = nbs_solve(base_params, 0.5, dp)
        assert not sol.agreed
        assert sol.p_star is None
        assert sol.u_cp == dp.d_cp and sol.u_sp == dp.d_sp


@given(w=st.floats(min_value=0.01, max_value=0.99))
@settings(max_examples=40, deadline=None)
def test_split_identity(w):
    params = MarketParams()
    dp = DisagreementPoint(0.0, 299.1874122665785, DisagreementSource.STABLE_OUTCOME)
    sol = nbs_solve(params, w, dp)
    assert sol.agreed
    lhs = (sol.u_cp - dp.d_cp) * (1.0 - w)
    rhs = (sol.u_sp - dp.d_sp) * w
    assert lhs == pytest.approx(rhs, rel=1e-9)
    assert sol.u_cp >= dp.d_cp - 1e-12
    assert sol.u_sp >= dp.d_sp - 1e-12


@given(
    d=st.floats(min_value=0.5, max_value=80.0),
    p1=st.floats(min_value=-3.0, max_value=5.0),
    p2=st.floats(min_value=-3.0, max_value=5.0),
)
@settings(max_examples=60)
def test_transfer_price_cancels_from_surplus(d, p1, p2):
    params = MarketParams()
    b = d / params.kappa_u
    total1 = cp_utility(d, b, p1, params) + sp_utility(d, b, p1, params)
    total2 = cp_utility(d, b, p2, params) + sp_utility(d, b, p2, params)
    assert total1 == pytest.approx(total2, rel=1e-9, abs=1e-9)


def test_manifold_forms_match_primitive_utilities(base_params):
    # Eq. (5a)/(2) evaluated at b = d/kappa_u equal the manifold expressions
    rng = np.random.default_rng(2)
    for _ in range(50):
        d = float(rng.uniform(0.1, 80.0))
        b = d / base_params.kappa_u
        p = float(rng.uniform(-2.0, 4.0))
        assert manifold_ad_utility(d, base_params) == pytest.approx(
            cp_utility(d, b, p, base_params) + p * b, rel=1e-9
        )
        assert manifold_satisfaction(d, base_params) == pytest.approx(
            sp_utility(d, b, p, base_params) - p * b, rel=1e-9
        )


class TestPercentIncrease:
    def test_from_zero_is_hundred(self):
        assert percent_increase(0.0, 42.0) == 100.0

    def test_no_change_is_zero(self):
        assert percent_increase(42.0, 42.0) == 0.0

    def test_halfway(self):
        assert percent_increase(50.0, 100.0) == 50.0

    def test_undefined_at_zero_after(self):
        with pytest.raises(DomainError):
            percent_increase(10.0, 0.0)
