import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsd import (
    DomainError,
    InvalidParams,
    MarketParams,
    Variant,
    ad_utility,
    cp_utility,
    demand_update,
    sp_utility,
    user_satisfaction,
    validate_params,
)
from qsd.spne import min_quality_price


class TestValidateParams:
    def test_paper_fixed_set_is_valid(self, base_params):
        validate_params(base_params)  # kappa_cp * zeta = 3 > e

    def test_nontriviality_violation(self):
        with pytest.raises(InvalidParams, match="kappa_cp"):
            validate_params(MarketParams(zeta=0.2, kappa_cp=10.0, kappa_u=5.0))

    def test_sponsorable_cap_exceeds_total(self):
        with pytest.raises(InvalidParams, match="n_hat"):
            validate_params(MarketParams(n_hat=30.0, big_n=25.0))

    @pytest.mark.parametrize(
        "field", ["alpha", "gamma", "zeta", "kappa_u", "kappa_cp", "kappa_sp",
                  "big_d", "big_n", "n_hat"],
    )
    def test_positivity(self, field, base_params):
        with pytest.raises(InvalidParams, match=field):
            validate_params(base_params.with_(**{field: 0.0}))

    @pytest.mark.parametrize("field", ["nu1", "nu2"])
    def test_weight_nonnegativity(self, field, base_params):
        with pytest.raises(InvalidParams, match=field):
            validate_params(base_params.with_(**{field: -0.5}))
        validate_params(base_params.with_(**{field: 0.0}))


class TestDemandUpdate:
    def test_stable_quality_is_fixed_point(self):
        params = MarketParams(kappa_u=10.0 / 3.0)
        assert demand_update(10.0, 3.0, params) == 10.0

    def test_zero_demand_stays_zero(self, base_params):
        assert demand_update(0.0, 5.0, base_params) == 0.0

    def test_log_e_quality(self):
        # kappa_u * b / d = e, gamma = 0.5: bracket is 1.5
        params = MarketParams(kappa_u=1.0, gamma=0.5)
        assert demand_update(10.0, 10.0 * math.e, params) == pytest.approx(
            15.0, rel=1e-12
        )

    def test_bracket_clamps_to_zero(self):
        # gamma * ln(1/e) = -2: the whole bracket is negative
        params = MarketParams(kappa_u=1.0, gamma=2.0)
        assert demand_update(10.0, 10.0 / math.e, params) == 0.0

    def test_rejects_nonpositive_bits_at_positive_demand(self, base_params):
        with pytest.raises(DomainError):
            demand_update(10.0, 0.0, base_params)

    def test_floor_collapses_to_zero(self, base_params):
        # a positive result below 1e-12 terminates the trajectory
        assert demand_update(5e-13, 5e-13 / base_params.kappa_u, base_params) == 0.0


class TestAdUtility:
    def test_unit_quality_ratio_gives_zero(self):
        params = MarketParams(kappa_cp=10.0)
        assert ad_utility(10.0, 1.0, params) == 0.0

    def test_zero_demand(self, base_params):
        assert ad_utility(0.0, 3.0, base_params) == 0.0

    def test_direct_evaluation(self, base_params):
        # 10 * ln 3 against the tabulated logarithm
        assert ad_utility(10.0, 3.0, base_params) == pytest.approx(
            10.986122886681098, rel=1e-13
        )

    def test_rejects_nonpositive_bits(self, base_params):
        with pytest.raises(DomainError):
            ad_utility(10.0, -1.0, base_params)


class TestCpUtility:
    def test_zero_price_equals_ad_utility(self, base_params):
        assert cp_utility(10.0, 5.0, 0.0, base_params) == ad_utility(
            10.0, 5.0, base_params
        )

    def test_zero_extraction_price(self, base_params):
        # the min-quality price renders the CP utility exactly zero
        d = 10.0
        p = min_quality_price(base_params)
        assert abs(cp_utility(d, base_params.zeta * d, p, base_params)) < 1e-12

    def test_direct_evaluation(self, base_params):
        assert cp_utility(10.0, 5.0, 1.0, base_params) == pytest.approx(
            11.094379124341003, rel=1e-13
        )


class TestUserSatisfaction:
    def test_no_sponsoring_base(self, base_params):
        # 50 * ln 20
        assert user_satisfaction(0.0, 0.0, base_params) == pytest.approx(
            149.78661367769953, rel=1e-13
        )

    def test_variants_coincide_at_zero_demand(self, base_params):
        aug = base_params.with_(variant=Variant.AUGMENTED_BEST_EFFORT)
        assert user_satisfaction(0.0, 0.0, aug) == user_satisfaction(
            0.0, 0.0, base_params
        )

    def test_zero_weights(self, base_params):
        params = base_params.with_(nu1=0.0, nu2=0.0)
        assert user_satisfaction(10.0, 5.0, params) == 0.0

    def test_rejects_bits_at_capacity(self, base_params):
        with pytest.raises(DomainError):
            user_satisfaction(10.0, base_params.big_n, base_params)

    def test_augmented_no_sponsoring_pools_demand(self, base_params):
        aug = base_params.with_(variant=Variant.AUGMENTED_BEST_EFFORT)
        d = 10.0
        pool = base_params.big_d + d
        expected = pool * math.log(base_params.kappa_sp * base_params.big_n / pool)
        assert user_satisfaction(d, 0.0, aug) == pytest.approx(expected, rel=1e-13)


class TestSpUtility:
    def test_zero_bits_is_no_sponsoring_branch(self, base_params):
        assert sp_utility(10.0, 0.0, 7.0, base_params) == user_satisfaction(
            10.0, 0.0, base_params
        )

    def test_zero_price(self, base_params):
        assert sp_utility(10.0, 5.0, 0.0, base_params) == user_satisfaction(
            10.0, 5.0, base_params
        )

    def test_direct_evaluation(self, base_params):
        # 10 + 10*ln 5 + 50*ln 19
        assert sp_utility(10.0, 5.0, 2.0, base_params) == pytest.approx(
            173.316328082663, rel=1e-13
        )


# ---------------------------------------------------------------------------
# properties

positive = st.floats(min_value=1e-3, max_value=1e3)
gammas = st.floats(min_value=1e-2, max_value=4.0)


@given(b=positive, kappa_u=positive, gamma=gammas)
def test_stable_demand_is_exact_fixed_point(b, kappa_u, gamma):
    # the stable demand d = kappa_u * b is a float-exact fixed point
    params = MarketParams(kappa_u=kappa_u, gamma=gamma)
    d = kappa_u * b
    assert demand_update(d, b, params) == d


@given(d=positive, b=positive, kappa_u=positive, gamma=gammas)
def test_demand_update_never_negative(d, b, kappa_u, gamma):
    params = MarketParams(kappa_u=kappa_u, gamma=gamma)
    assert demand_update(d, b, params) >= 0.0


@given(
    d=positive,
    gamma=gammas,
    kappa_u=positive,
    drop=st.floats(min_value=1.000001, max_value=5.0),
)
def test_demand_update_clamps_when_bracket_nonpositive(d, gamma, kappa_u, drop):
    # gamma * ln(kappa_u*b/d) <= -1  =>  next demand is exactly 0
    params = MarketParams(kappa_u=kappa_u, gamma=gamma)
    b = d * math.exp(-drop / gamma) / kappa_u
    if b > 0:
        assert demand_update(d, b, params) == 0.0


@given(d=st.floats(min_value=0.1, max_value=80.0), p=st.floats(0.0, 4.0))
@settings(max_examples=50)
def test_cp_utility_concave_in_bits(d, p):
    params = MarketParams()
    lo, hi = params.zeta * d, params.n_hat
    n = 101
    step = (hi - lo) / (n - 1)
    us = [cp_utility(d, lo + i * step, p, params) for i in range(n)]
    for i in range(1, n - 1):
        second = us[i - 1] - 2 * us[i] + us[i + 1]
        assert second <= 1e-9 * max(1.0, abs(us[i]))


@given(
    d=st.floats(min_value=1e-2, max_value=1e3),
    b=st.floats(min_value=1e-2, max_value=90.0),
)
def test_variants_coincide_while_sponsoring(d, b):
    base = MarketParams()
    aug = base.with_(variant=Variant.AUGMENTED_BEST_EFFORT)
    assert user_satisfaction(d, b, aug) == user_satisfaction(d, b, base)
