"""Nash bargaining between a long-sighted CP and SP.

If bargaining fails, the players fall back to short-sighted sequential play;
its asymptotic payoffs form the disagreement point.  Cooperating, they pick
a stable demand on the manifold b = d/kappa_u to maximize the aggregate
excess profit (the transfer price cancels from the sum), then split the
surplus with a price chosen so each side's gain is proportional to its
bargaining power.  Above a threshold power w_t the transfer price turns
negative and money flows from the SP to the CP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import DomainError
from .model import MarketParams, cp_utility, sp_utility
from .dynamics import (
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    OutcomeKind,
    SimulationMode,
    classify_outcome,
    no_sponsoring_outcome,
    simulate,
    stable_point_payoffs,
)
from .spne import no_sponsoring_payoff


class DisagreementSource(Enum):
    STABLE_OUTCOME = "stable_outcome"
    TIME_AVERAGE = "time_average"


@dataclass(frozen=True)
class DisagreementPoint:
    """Per-epoch payoffs each player falls back to if bargaining fails."""

    d_cp: float
    d_sp: float
    source: DisagreementSource


@dataclass(frozen=True)
class BargainingSolution:
    """NBS demand/price and the resulting payoff split.

    When ``agreed`` is False no price exists and the payoffs are the
    disagreement payoffs; ``w_threshold`` is NaN if the excess profit is not
    positive.
    """

    d_star: float
    p_star: Optional[float]
    u_cp: float
    u_sp: float
    u_excess: float
    w_threshold: float
    agreed: bool


def manifold_ad_utility(d: float, params: MarketParams) -> float:
    """Ad utility on the stable manifold b = d/kappa_u."""
    return params.alpha * d * math.log(params.kappa_cp / params.kappa_u)


def manifold_satisfaction(d: float, params: MarketParams) -> float:
    """User satisfaction on the stable manifold b = d/kappa_u."""
    val = params.nu1 * d * math.log(params.kappa_sp / params.kappa_u)
    if params.nu2 > 0:
        val += params.nu2 * params.big_d * math.log(
            params.kappa_sp * (params.big_n - d / params.kappa_u) / params.big_d
        )
    return val


def disagreement_payoffs(
    params: MarketParams,
    d0: float = 1.0,
    *,
    horizon: int = DEFAULT_HORIZON,
    tol: float = DEFAULT_TOL,
) -> DisagreementPoint:
    """Asymptotic payoffs of short-sighted sequential play from demand d0.

    A trajectory that settles on a stable outcome yields that outcome's
    per-epoch payoffs (no-sponsoring gives the CP 0 and the SP its
    baseline).  An unstable trajectory is summarized by the time average of
    the per-epoch payoffs over the second half of the horizon.
    """
    traj = simulate(
        d0, params, SimulationMode.BOTH_SHORT_SIGHTED, horizon, tol=tol
    )
    outcome = classify_outcome(traj, params, tol)
    if outcome.kind is OutcomeKind.NO_SPONSORING:
        d_end = traj.demands[-1]
        return DisagreementPoint(
            0.0, no_sponsoring_payoff(d_end, params), DisagreementSource.STABLE_OUTCOME
        )
    if outcome.kind is not OutcomeKind.UNSTABLE:
        u_cp, u_sp = stable_point_payoffs(outcome, params)
        return DisagreementPoint(u_cp, u_sp, DisagreementSource.STABLE_OUTCOME)
    start = len(traj.decisions) // 2
    total_cp = total_sp = 0.0
    count = 0
    for d, dec in zip(traj.demands[start:], traj.decisions[start:]):
        total_cp += cp_utility(d, dec.b, dec.p, params)
        total_sp += sp_utility(d, dec.b, dec.p, params)
        count += 1
    return DisagreementPoint(
        total_cp / count, total_sp / count, DisagreementSource.TIME_AVERAGE
    )


def excess_profit(d: float, params: MarketParams, dp: DisagreementPoint) -> float:
    """Joint surplus over disagreement at stable demand d; price-free.

    alpha*d*ln(kappa_cp/kappa_u) + nu1*d*ln(kappa_sp/kappa_u)
      + nu2*D*ln(kappa_sp*(N - d/kappa_u)/D) - d_cp - d_sp
    """
    if d / params.kappa_u >= params.big_n:
        raise DomainError(
            f"d/kappa_u = {d / params.kappa_u} must stay below big_n = {params.big_n}"
        )
    return (
        manifold_ad_utility(d, params)
        + manifold_satisfaction(d, params)
        - dp.d_cp
        - dp.d_sp
    )


def excess_profit_argmax(params: MarketParams) -> float:
    """Maximizer of the excess profit over [0, n_hat*kappa_u].

    The first-order condition gives
        d = kappa_u*N - nu2*D / (alpha*ln(kappa_cp/kappa_u) + nu1*ln(kappa_sp/kappa_u));
    the objective is concave, so clamping to the boundary is exact.
    """
    slope = params.alpha * math.log(params.kappa_cp / params.kappa_u) + (
        params.nu1 * math.log(params.kappa_sp / params.kappa_u)
    )
    hi = params.n_hat * params.kappa_u
    if slope <= 0:
        return 0.0
    if params.nu2 == 0:
        return hi
    d_star = params.kappa_u * params.big_n - params.nu2 * params.big_d / slope
    return min(max(d_star, 0.0), hi)


def nbs_solve(
    params: MarketParams, w: float, dp: DisagreementPoint
) -> BargainingSolution:
    """Nash bargaining solution for CP bargaining power w in [0, 1].

    The demand maximizes the excess profit; the price splits the surplus so
    that u_cp - d_cp = w * u_excess and u_sp - d_sp = (1-w) * u_excess.  No
    agreement is reached when the maximal excess profit is not strictly
    positive (or the maximizing demand is 0).
    """
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"bargaining power must lie in [0, 1], got {w}")
    d_star = excess_profit_argmax(params)
    u_exc = excess_profit(d_star, params, dp)
    if u_exc <= 0 or d_star <= 0:
        return BargainingSolution(
            d_star=d_star,
            p_star=None,
            u_cp=dp.d_cp,
            u_sp=dp.d_sp,
            u_excess=u_exc,
            w_threshold=math.nan if u_exc <= 0 else (
                (manifold_ad_utility(d_star, params) - dp.d_cp) / u_exc
            ),
            agreed=False,
        )
    u_ad = manifold_ad_utility(d_star, params)
    u_s = manifold_satisfaction(d_star, params)
    p_star = (params.kappa_u / d_star) * ((u_ad - dp.d_cp) - w * u_exc)
    transfer = p_star * d_star / params.kappa_u
    return BargainingSolution(
        d_star=d_star,
        p_star=p_star,
        u_cp=u_ad - transfer,
        u_sp=transfer + u_s,
        u_excess=u_exc,
        w_threshold=(u_ad - dp.d_cp) / u_exc,
        agreed=True,
    )


def percent_increase(u_before: float, u_after: float) -> float:
    """(u_after - u_before) / u_after * 100."""
    if u_after == 0:
        raise DomainError("percent increase is undefined at zero post-bargaining utility")
    return (u_after - u_before) / u_after * 100.0
