"""Per-epoch subgame-perfect equilibrium by backward induction.

Stage 2 (follower): the CP picks its sponsored bits as a piecewise function
of the quoted price -- all available bits when the price is cheap, the
unconstrained optimum ``alpha*d/p`` in a middle band, the minimum-quality
amount ``zeta*d`` when expensive, and exit beyond the zero-profit price.

Stage 1 (leader): the SP needs to check only three candidate prices -- the
top of the all-bits region, the zero-profit price, and an interior
stationary point -- and offers sponsorship iff the best of them beats the
no-sponsoring baseline.  An indifferent player participates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from .errors import DomainError
from .model import (
    EXIT_DECISION,
    EpochDecision,
    MarketParams,
    Variant,
    cp_utility,
    sp_utility,
)


class CpRegion(Enum):
    MAX_BITS = "max_bits"
    INTERIOR = "interior"
    MIN_QUALITY = "min_quality"
    EXIT = "exit"


@dataclass(frozen=True)
class CpResponse:
    """Stage-2 best response: join flag, bits, and which price region fired."""

    z: int
    b: Optional[float]
    region: CpRegion


class PriceCandidate(Enum):
    PRICE_MAX_BITS = "price_max_bits"
    PRICE_INTERIOR = "price_interior"
    PRICE_MIN_QUALITY = "price_min_quality"


@dataclass(frozen=True)
class SpDecision:
    """Stage-1 outcome: offer flag, price, winning candidate, achieved payoff.

    ``u_sp`` is the no-sponsoring baseline when ``y == 0``.
    """

    y: int
    p: Optional[float]
    chosen_candidate: Optional[PriceCandidate]
    u_sp: float


def min_quality_price(params: MarketParams) -> float:
    """Highest price at which the CP still joins: alpha*ln(kappa_cp*zeta)/zeta.

    At this price the CP sponsors zeta*d and earns exactly zero.
    """
    return params.alpha * math.log(params.kappa_cp * params.zeta) / params.zeta


def cp_best_response(d: float, p: float, params: MarketParams) -> CpResponse:
    """Stage-2 best response of the CP to price p at demand d.

    Exits when d = 0 or d > n_hat/zeta (no feasible bits).  Otherwise the
    bits are n_hat, alpha*d/p, or zeta*d depending on where p falls; at
    region boundaries the two formulas agree and the lower-price label is
    returned.  An indifferent CP (zero payoff) joins.
    """
    if p < 0:
        raise DomainError(f"price must be >= 0, got {p}")
    if d <= 0 or d > params.max_demand:
        return CpResponse(z=0, b=None, region=CpRegion.EXIT)
    alpha = params.alpha
    if p <= alpha * d / params.n_hat:
        return CpResponse(z=1, b=params.n_hat, region=CpRegion.MAX_BITS)
    if p <= alpha / params.zeta:
        return CpResponse(z=1, b=alpha * d / p, region=CpRegion.INTERIOR)
    if p <= min_quality_price(params):
        return CpResponse(z=1, b=params.zeta * d, region=CpRegion.MIN_QUALITY)
    return CpResponse(z=0, b=None, region=CpRegion.EXIT)


def sp_candidate_prices(
    d: float, params: MarketParams
) -> List[Tuple[PriceCandidate, float]]:
    """Candidate optimum prices for the SP at demand d.

    Returns the all-bits boundary price and the zero-profit price, plus the
    interior stationary price alpha*(nu1*d + nu2*D)/(nu1*N) when it lies in
    its feasibility window [alpha*d/n_hat, alpha/zeta].  nu1 = 0 simply drops
    the interior candidate.
    """
    if d <= 0:
        raise DomainError(f"demand must be > 0, got {d}")
    alpha = params.alpha
    out = [(PriceCandidate.PRICE_MAX_BITS, alpha * d / params.n_hat)]
    if params.nu1 > 0:
        p_int = alpha * (params.nu1 * d + params.nu2 * params.big_d) / (
            params.nu1 * params.big_n
        )
        if alpha * d / params.n_hat <= p_int <= alpha / params.zeta:
            out.append((PriceCandidate.PRICE_INTERIOR, p_int))
    out.append((PriceCandidate.PRICE_MIN_QUALITY, min_quality_price(params)))
    return out


def no_sponsoring_payoff(d: float, params: MarketParams) -> float:
    """SP payoff when no sponsorship program is running.

    Base variant: nu2*D*ln(kappa_sp*N/D).  Augmented variant folds the CP's
    demand into the best-effort pool: nu2*(D+d)*ln(kappa_sp*N/(D+d)).
    """
    if params.variant is Variant.AUGMENTED_BEST_EFFORT:
        pool = params.big_d + d
        return params.nu2 * pool * math.log(params.kappa_sp * params.big_n / pool)
    return params.nu2 * params.big_d * math.log(
        params.kappa_sp * params.big_n / params.big_d
    )


def sp_equilibrium_price(d: float, params: MarketParams) -> SpDecision:
    """Stage-1 optimum of the SP at demand d.

    No offer when d = 0 or d > n_hat/zeta.  Otherwise evaluates the SP
    payoff at every feasible candidate price (bits from the CP's best
    response) and offers at the argmax iff it is at least the no-sponsoring
    baseline.  Payoff ties between candidates break in the fixed order
    max-bits, interior, min-quality; a tie with the baseline resolves to
    offering.
    """
    baseline = no_sponsoring_payoff(d, params)
    if d <= 0 or d > params.max_demand:
        return SpDecision(y=0, p=None, chosen_candidate=None, u_sp=baseline)
    best: Optional[Tuple[PriceCandidate, float, float]] = None
    for label, price in sp_candidate_prices(d, params):
        resp = cp_best_response(d, price, params)
        if resp.z != 1:
            continue
        # n_hat == big_n can push the all-bits candidate to b == N where the
        # non-sponsored term diverges; such a candidate is never optimal.
        if resp.b >= params.big_n:
            continue
        payoff = sp_utility(d, resp.b, price, params)
        if best is None or payoff > best[2]:
            best = (label, price, payoff)
    if best is None or best[2] < baseline:
        return SpDecision(y=0, p=None, chosen_candidate=None, u_sp=baseline)
    return SpDecision(y=1, p=best[1], chosen_candidate=best[0], u_sp=best[2])


def spne_epoch(d: float, params: MarketParams) -> EpochDecision:
    """One epoch of backward induction: SP prices, CP responds."""
    sp = sp_equilibrium_price(d, params)
    if sp.y == 0:
        return EXIT_DECISION
    resp = cp_best_response(d, sp.p, params)
    if resp.z == 0:
        return EpochDecision(y=1, p=sp.p, z=0, b=None)
    return EpochDecision(y=1, p=sp.p, z=1, b=resp.b)
