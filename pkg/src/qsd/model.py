"""Market primitives: parameters, demand dynamics, and the three utilities.

The market has one content provider (CP) that sponsors ``b`` resource units
per frame for its ``d`` users, paying a service provider (SP) a price ``p``
per unit.  Demand evolves multiplicatively with the log of the delivered
per-user quality ``b/d`` relative to the stable quality ``1/kappa_u``.

All functions here are pure; natural logarithm is used throughout (the
non-triviality condition ``kappa_cp * zeta > e`` pins the base).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import DomainError, InvalidParams

# Demands below this absolute floor collapse to exactly 0 so that dying
# trajectories terminate deterministically.
DEMAND_FLOOR = 1e-12

# |kappa_u * zeta - 1| within this window is treated as the minimum-quality
# regime (exact float equality would be a measure-zero event).
KAPPA_EQ_TOL = 1e-9


class Variant(Enum):
    """Model flavor for the no-sponsoring branch of user satisfaction.

    BASE keeps the best-effort pool at ``D``.  AUGMENTED_BEST_EFFORT adds the
    CP's own demand to the best-effort pool when nothing is sponsored (the
    correction matters only when ``d`` is not negligible next to ``D``).
    """

    BASE = "base"
    AUGMENTED_BEST_EFFORT = "augmented_best_effort"


@dataclass(frozen=True)
class MarketParams:
    """All market constants.

    Defaults follow the canonical numerical setup (nu1=1, n_hat=25, big_d=50,
    kappa_sp=kappa_cp=10, zeta=0.3) with alpha=1, gamma=0.5, big_n=100 and
    kappa_u=1/zeta as neutral fill-ins for the values that setup leaves free.
    """

    alpha: float = 1.0        # unit ad income per user per log-quality
    gamma: float = 0.5        # demand sensitivity to satisfaction
    zeta: float = 0.3         # minimum average quality, bits/frame
    kappa_u: float = 1.0 / 0.3  # 1/kappa_u is the stable quality
    kappa_cp: float = 10.0    # CP ad-utility constant
    kappa_sp: float = 10.0    # SP satisfaction constant
    nu1: float = 1.0          # weight on sponsored-content satisfaction
    nu2: float = 1.0          # weight on non-sponsored-content satisfaction
    big_d: float = 50.0       # total best-effort demand
    big_n: float = 100.0      # total resources per frame
    n_hat: float = 25.0       # sponsorable resources cap
    variant: Variant = Variant.BASE

    @property
    def max_demand(self) -> float:
        """Largest demand the CP can serve at minimum quality: n_hat/zeta."""
        return self.n_hat / self.zeta

    @property
    def stable_quality(self) -> float:
        return 1.0 / self.kappa_u

    def with_(self, **changes) -> "MarketParams":
        """Return a copy with the given fields replaced."""
        from dataclasses import replace

        return replace(self, **changes)


def validate_params(params: MarketParams) -> None:
    """Raise InvalidParams naming the first violated constraint."""
    positive = [
        ("alpha", params.alpha),
        ("gamma", params.gamma),
        ("zeta", params.zeta),
        ("kappa_u", params.kappa_u),
        ("kappa_cp", params.kappa_cp),
        ("kappa_sp", params.kappa_sp),
        ("big_d", params.big_d),
        ("big_n", params.big_n),
        ("n_hat", params.n_hat),
    ]
    for name, value in positive:
        if not value > 0:
            raise InvalidParams(f"{name} must be > 0, got {value}")
    for name, value in [("nu1", params.nu1), ("nu2", params.nu2)]:
        if not value >= 0:
            raise InvalidParams(f"{name} must be >= 0, got {value}")
    if not params.kappa_cp * params.zeta > math.e:
        raise InvalidParams(
            f"kappa_cp * zeta must exceed e = {math.e:.9f}, "
            f"got {params.kappa_cp * params.zeta}"
        )
    if not params.n_hat <= params.big_n:
        raise InvalidParams(
            f"n_hat must not exceed big_n, got n_hat={params.n_hat} > big_n={params.big_n}"
        )
    if not isinstance(params.variant, Variant):
        raise InvalidParams(f"variant must be a Variant, got {params.variant!r}")


@dataclass(frozen=True)
class EpochDecision:
    """One epoch's strategic outcome: SP offer/price, CP join/bits.

    ``p`` is present iff ``y == 1``; ``b`` is present iff ``z == 1``; and a
    joining CP implies an offering SP.
    """

    y: int
    p: Optional[float]
    z: int
    b: Optional[float]

    def __post_init__(self):
        if self.z == 1 and self.y != 1:
            raise ValueError("z=1 requires y=1")
        if (self.b is not None) != (self.z == 1):
            raise ValueError("b must be present iff z=1")
        if (self.p is not None) != (self.y == 1):
            raise ValueError("p must be present iff y=1")


EXIT_DECISION = EpochDecision(y=0, p=None, z=0, b=None)


@dataclass
class Trajectory:
    """Time series of demand and decisions produced by repeated play.

    ``decisions[t]`` is the play observed at ``demands[t]``.  If the game
    ended (a player exited or demand hit 0), ``terminated_at`` is that epoch
    and both sequences stop there; otherwise ``demands`` carries one final
    demand with no decision attached.
    """

    demands: list
    decisions: list
    terminated_at: Optional[int] = None


def demand_update(d: float, b: float, params: MarketParams) -> float:
    """Next-epoch demand: d * (1 + gamma*ln(kappa_u*b/d))+, or 0 from 0.

    The positive-part clamp applies to the whole bracket, so demand hits
    exactly 0 instead of going negative.  Results below DEMAND_FLOOR collapse
    to 0.  The quality ratio is computed as ``(kappa_u * b) / d`` so that a
    stable demand constructed as ``d = kappa_u * b`` is an exact fixed point.
    """
    if d < 0:
        raise DomainError(f"demand must be >= 0, got {d}")
    if d == 0:
        return 0.0
    if b <= 0:
        raise DomainError(f"bits must be > 0 when demand is positive, got {b}")
    bracket = 1.0 + params.gamma * math.log((params.kappa_u * b) / d)
    if bracket <= 0.0:
        return 0.0
    nxt = d * bracket
    return 0.0 if nxt < DEMAND_FLOOR else nxt


def ad_utility(d: float, b: float, params: MarketParams) -> float:
    """Advertisement utility alpha*d*ln(kappa_cp*b/d); 0 at zero demand.

    May be negative when the delivered quality falls below 1/kappa_cp.
    """
    if d < 0:
        raise DomainError(f"demand must be >= 0, got {d}")
    if d == 0:
        return 0.0
    if b <= 0:
        raise DomainError(f"bits must be > 0 when demand is positive, got {b}")
    return params.alpha * d * math.log(params.kappa_cp * b / d)


def cp_utility(d: float, b: float, p: float, params: MarketParams) -> float:
    """CP payoff: ad utility minus the sponsorship payment p*b."""
    return ad_utility(d, b, params) - p * b


def user_satisfaction(d: float, b: float, params: MarketParams) -> float:
    """End-user satisfaction for sponsored plus non-sponsored content.

    With active sponsoring (d > 0 and b > 0):
        nu1*d*ln(kappa_sp*b/d) + nu2*D*ln(kappa_sp*(N-b)/D)
    Otherwise the sponsored term drops; the AUGMENTED_BEST_EFFORT variant
    additionally folds d into the best-effort pool D.

    Requires b < N strictly (the non-sponsored term diverges at b = N).
    """
    if d < 0 or b < 0:
        raise DomainError(f"demand and bits must be >= 0, got d={d}, b={b}")
    if b >= params.big_n:
        raise DomainError(
            f"bits must be < big_n = {params.big_n}, got {b}"
        )
    ksp = params.kappa_sp
    if d > 0 and b > 0:
        sponsored = params.nu1 * d * math.log(ksp * b / d)
        best_effort = params.nu2 * params.big_d * math.log(
            ksp * (params.big_n - b) / params.big_d
        )
        return sponsored + best_effort
    if params.variant is Variant.AUGMENTED_BEST_EFFORT:
        pool = params.big_d + d
        return params.nu2 * pool * math.log(ksp * (params.big_n - b) / pool)
    return params.nu2 * params.big_d * math.log(
        ksp * (params.big_n - b) / params.big_d
    )


def sp_utility(d: float, b: float, p: float, params: MarketParams) -> float:
    """SP payoff: sponsorship revenue p*b plus user satisfaction."""
    return p * b + user_satisfaction(d, b, params)
