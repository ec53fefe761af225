"""Repeated play, asymptotic-outcome classification, and long-sighted targets.

Repeating the one-shot equilibrium under the demand dynamics drives the
market to one of four stable outcomes -- no sponsoring, maximum-bit,
minimum-quality, or an interior point -- or leaves it unstable.  A
long-sighted player can instead steer the demand toward the stable point it
prefers: the SP by adjusting its price path, the CP by adjusting its bits,
each moving a configurable fraction of the remaining gap per epoch so the
demand never overshoots into the exit region.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, TextIO, Tuple

from .errors import ClassificationAmbiguous, DomainError
from .model import (
    DEMAND_FLOOR,
    EXIT_DECISION,
    KAPPA_EQ_TOL,
    EpochDecision,
    MarketParams,
    Trajectory,
    cp_utility,
    demand_update,
    sp_utility,
    validate_params,
)
from .spne import (
    cp_best_response,
    min_quality_price,
    no_sponsoring_payoff,
    sp_equilibrium_price,
    spne_epoch,
)

# Demand gap (relative) below which a steering player locks the exact target
# play instead of the ramped one.
_SNAP_TOL = 1e-9

DEFAULT_HORIZON = 20_000
DEFAULT_TOL = 1e-8
STABLE_EPOCHS = 50
DEFAULT_RAMP = 0.2


class OutcomeKind(Enum):
    """Asymptotic market outcomes, numbered as in the phase diagrams."""

    UNSTABLE = 0
    NO_SPONSORING = 1
    MAX_BIT_SPONSORING = 2
    MIN_QUALITY_SPONSORING = 3
    INTERIOR_STABLE = 4


SPONSORING_KINDS = (
    OutcomeKind.MAX_BIT_SPONSORING,
    OutcomeKind.MIN_QUALITY_SPONSORING,
    OutcomeKind.INTERIOR_STABLE,
)


@dataclass(frozen=True)
class OutcomeTuple:
    """The asymptotic 5-tuple (d, y, p, z, b); absent entries are None."""

    d: Optional[float]
    y: int
    p: Optional[float]
    z: int
    b: Optional[float]


@dataclass(frozen=True)
class StableOutcome:
    kind: OutcomeKind
    tuple: Optional[OutcomeTuple] = None


class SimulationMode(Enum):
    BOTH_SHORT_SIGHTED = "both_short_sighted"
    LONG_SIGHTED_SP = "long_sighted_sp"
    LONG_SIGHTED_CP = "long_sighted_cp"


def no_sponsoring_outcome() -> StableOutcome:
    return StableOutcome(
        OutcomeKind.NO_SPONSORING, OutcomeTuple(None, 0, None, 0, None)
    )


def max_bit_outcome(params: MarketParams) -> StableOutcome:
    """(kappa_u*n_hat, 1, alpha*kappa_u, 1, n_hat); needs kappa_u <= 1/zeta."""
    d = params.kappa_u * params.n_hat
    return StableOutcome(
        OutcomeKind.MAX_BIT_SPONSORING,
        OutcomeTuple(d, 1, params.alpha * params.kappa_u, 1, params.n_hat),
    )


def min_quality_outcome(d: float, params: MarketParams) -> StableOutcome:
    """(d, 1, min-quality price, 1, zeta*d); any d in (0, n_hat/zeta]."""
    return StableOutcome(
        OutcomeKind.MIN_QUALITY_SPONSORING,
        OutcomeTuple(d, 1, min_quality_price(params), 1, params.zeta * d),
    )


def interior_outcome(params: MarketParams) -> Optional[StableOutcome]:
    """Interior stable point, or None when 0 < b <= n_hat fails (or nu1 = 0)."""
    if params.nu1 <= 0:
        return None
    b = params.big_n - params.nu2 * params.big_d / (params.kappa_u * params.nu1)
    if not 0 < b <= params.n_hat:
        return None
    d = params.kappa_u * params.big_n - (params.nu2 / params.nu1) * params.big_d
    return StableOutcome(
        OutcomeKind.INTERIOR_STABLE,
        OutcomeTuple(d, 1, params.alpha * params.kappa_u, 1, b),
    )


def stable_point_payoffs(
    outcome: StableOutcome, params: MarketParams
) -> Tuple[float, float]:
    """(u_cp, u_sp) at a sponsoring outcome's 5-tuple."""
    if outcome.kind not in SPONSORING_KINDS or outcome.tuple is None:
        raise DomainError(f"no payoffs at a {outcome.kind.name} outcome")
    t = outcome.tuple
    return (
        cp_utility(t.d, t.b, t.p, params),
        sp_utility(t.d, t.b, t.p, params),
    )


def min_quality_optimal_demand(params: MarketParams) -> float:
    """Demand maximizing the SP payoff over minimum-quality stable points.

    The payoff along that family is
        p_mq*zeta*d + nu1*d*ln(kappa_sp*zeta) + nu2*D*ln(kappa_sp*(N-zeta*d)/D)
    with p_mq the zero-profit price, so the stationary point is
        d* = N/zeta - nu2*D / (alpha*ln(kappa_cp*zeta) + nu1*ln(kappa_sp*zeta))
    clamped to [0, n_hat/zeta] (the payoff is concave in d, so clamping to
    the nearer boundary is exact).
    """
    if params.kappa_sp * params.zeta == 1.0:
        raise DomainError("kappa_sp * zeta = 1 leaves the optimum undefined")
    slope = params.alpha * math.log(params.kappa_cp * params.zeta) + (
        params.nu1 * math.log(params.kappa_sp * params.zeta)
    )
    if slope <= 0:
        return 0.0
    d_star = params.big_n / params.zeta - params.nu2 * params.big_d / slope
    if d_star < 0:
        return 0.0
    return min(d_star, params.max_demand)


def long_sighted_sp_target(params: MarketParams) -> StableOutcome:
    """Stable point a long-sighted SP steers the market to.

    At kappa_u = 1/zeta this is the minimum-quality point with the optimal
    demand (the SP extracts the whole CP profit there); at kappa_u < 1/zeta
    it is whichever of max-bit/interior pays the SP more, provided it beats
    the no-sponsoring baseline; over-provisioned quality (kappa_u > 1/zeta)
    admits no stable sponsoring at all.
    """
    ratio = params.kappa_u * params.zeta
    if ratio > 1.0 + KAPPA_EQ_TOL:
        return no_sponsoring_outcome()
    if abs(ratio - 1.0) <= KAPPA_EQ_TOL:
        d = min_quality_optimal_demand(params)
        if d <= 0:
            return no_sponsoring_outcome()
        return min_quality_outcome(d, params)
    candidates = [max_bit_outcome(params)]
    inner = interior_outcome(params)
    if inner is not None:
        candidates.append(inner)
    viable = []
    for out in candidates:
        _, u_sp = stable_point_payoffs(out, params)
        if u_sp >= no_sponsoring_payoff(out.tuple.d, params):
            viable.append((out, u_sp))
    if not viable:
        return no_sponsoring_outcome()
    return max(viable, key=lambda item: item[1])[0]


def long_sighted_cp_ranking(
    params: MarketParams,
) -> List[Tuple[StableOutcome, float]]:
    """Sponsoring stable points in decreasing order of CP payoff.

    Max-bit first, then interior, then minimum quality (where the CP earns
    exactly 0).  At kappa_u = 1/zeta every stable point delivers quality
    zeta, so only the minimum-quality entry remains; kappa_u > 1/zeta yields
    an empty list.  Minimum-quality entries carry the SP-optimal demand.
    """
    ratio = params.kappa_u * params.zeta
    if ratio > 1.0 + KAPPA_EQ_TOL:
        return []
    d_mq = min_quality_optimal_demand(params)
    if d_mq <= 0:
        # any demand in (0, n_hat/zeta] supports the point; fall back to the cap
        d_mq = params.max_demand
    if abs(ratio - 1.0) <= KAPPA_EQ_TOL:
        return [(min_quality_outcome(d_mq, params), 0.0)]
    entries = [max_bit_outcome(params)]
    inner = interior_outcome(params)
    if inner is not None:
        entries.append(inner)
    ranked = [(out, stable_point_payoffs(out, params)[0]) for out in entries]
    ranked.append((min_quality_outcome(d_mq, params), 0.0))
    ranked.sort(key=lambda item: -item[1])
    return ranked


# ---------------------------------------------------------------------------
# steering


@dataclass
class _SteeringTarget:
    kind: OutcomeKind
    d_target: float
    p_target: float


def _steering_bits(d: float, d_target: float, ramp: float, params: MarketParams) -> float:
    """Bits moving demand a fraction ``ramp`` of the gap toward the target.

    Inverts the demand map exactly, then clamps to the CP-feasible interval
    [zeta*d, n_hat]; the clamped move is always shorter than the requested
    one, so the approach is monotone and never overshoots.
    """
    desired = d + ramp * (d_target - d)
    quality = math.exp((desired / d - 1.0) / params.gamma) / params.kappa_u
    b = quality * d
    return min(max(b, params.zeta * d), params.n_hat)


def _resolve_sp_target(params: MarketParams, d0: float) -> Optional[_SteeringTarget]:
    target = long_sighted_sp_target(params)
    if target.kind not in SPONSORING_KINDS:
        return None
    d_t = target.tuple.d
    if target.kind is OutcomeKind.MIN_QUALITY_SPONSORING:
        # quality never drops below zeta = 1/kappa_u here, so demand cannot
        # shrink: targets below d0 are unreachable and the SP settles for d0
        # if that still beats staying out.
        if d_t < d0:
            d_t = d0
            if d_t > params.max_demand:
                return None
            held = min_quality_outcome(d_t, params)
            _, u_sp = stable_point_payoffs(held, params)
            if u_sp < no_sponsoring_payoff(d_t, params):
                return None
        return _SteeringTarget(target.kind, d_t, min_quality_price(params))
    return _SteeringTarget(target.kind, d_t, params.alpha * params.kappa_u)


def _resolve_cp_target(params: MarketParams, d0: float) -> Optional[_SteeringTarget]:
    """Best CP-ranked stable point the short-sighted SP's pricing supports."""
    ratio = params.kappa_u * params.zeta
    for outcome, _ in long_sighted_cp_ranking(params):
        if outcome.kind is OutcomeKind.MIN_QUALITY_SPONSORING:
            if abs(ratio - 1.0) > KAPPA_EQ_TOL:
                continue  # not holdable off the kappa_u = 1/zeta manifold
            d_t = max(outcome.tuple.d, d0)
            p_t = min_quality_price(params)
        else:
            d_t = outcome.tuple.d
            p_t = params.alpha * params.kappa_u
        if not 0 < d_t <= params.max_demand:
            continue
        dec = sp_equilibrium_price(d_t, params)
        if dec.y == 1 and math.isclose(dec.p, p_t, rel_tol=1e-9, abs_tol=1e-12):
            return _SteeringTarget(outcome.kind, d_t, p_t)
    return None


def _long_sp_decision(
    d: float, target: Optional[_SteeringTarget], params: MarketParams, ramp: float
) -> EpochDecision:
    if target is None or d <= 0 or d > params.max_demand:
        return EXIT_DECISION
    gap = abs(d - target.d_target)
    if (
        target.kind is OutcomeKind.MIN_QUALITY_SPONSORING
        and gap <= _SNAP_TOL * target.d_target
    ):
        p = target.p_target
    else:
        b_des = _steering_bits(d, target.d_target, ramp, params)
        if b_des >= params.n_hat:
            p = params.alpha * d / params.n_hat
        else:
            p = params.alpha * d / b_des
    resp = cp_best_response(d, p, params)
    if resp.z != 1:
        return EXIT_DECISION
    return EpochDecision(y=1, p=p, z=1, b=resp.b)


def _long_cp_decision(
    d: float, target: Optional[_SteeringTarget], params: MarketParams, ramp: float
) -> EpochDecision:
    if target is None or d <= 0 or d > params.max_demand:
        return EXIT_DECISION
    dec = sp_equilibrium_price(d, params)
    if dec.y == 0:
        return EXIT_DECISION
    gap = abs(d - target.d_target)
    if gap <= _SNAP_TOL * target.d_target:
        if target.kind is OutcomeKind.MIN_QUALITY_SPONSORING:
            b = params.zeta * d
        else:
            b = d / params.kappa_u
    else:
        b = _steering_bits(d, target.d_target, ramp, params)
    return EpochDecision(y=1, p=dec.p, z=1, b=b)


def simulate(
    d0: float,
    params: MarketParams,
    mode: SimulationMode = SimulationMode.BOTH_SHORT_SIGHTED,
    horizon: int = DEFAULT_HORIZON,
    *,
    tol: float = DEFAULT_TOL,
    stable_epochs: int = STABLE_EPOCHS,
    ramp: float = DEFAULT_RAMP,
) -> Trajectory:
    """Play the epoch game repeatedly from demand d0.

    BOTH_SHORT_SIGHTED replays the one-shot equilibrium; the long-sighted
    modes steer toward the corresponding preferred stable point.  The run
    stops at termination (a player exits or demand dies), once the demand
    increment stays below ``tol`` (relative) for ``stable_epochs``
    consecutive epochs, or at the horizon.
    """
    validate_params(params)
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    if not d0 > 0:
        raise DomainError(f"d0 must be > 0, got {d0}")
    d = d0 if d0 >= DEMAND_FLOOR else 0.0

    target: Optional[_SteeringTarget] = None
    if mode is SimulationMode.LONG_SIGHTED_SP:
        target = _resolve_sp_target(params, d)
    elif mode is SimulationMode.LONG_SIGHTED_CP:
        target = _resolve_cp_target(params, d)

    demands = [d]
    decisions: List[EpochDecision] = []
    terminated_at: Optional[int] = None
    consecutive = 0
    for t in range(horizon):
        if mode is SimulationMode.BOTH_SHORT_SIGHTED:
            dec = spne_epoch(d, params)
        elif mode is SimulationMode.LONG_SIGHTED_SP:
            dec = _long_sp_decision(d, target, params, ramp)
        else:
            dec = _long_cp_decision(d, target, params, ramp)
        decisions.append(dec)
        if dec.z != 1:
            terminated_at = t
            break
        d_next = demand_update(d, dec.b, params)
        demands.append(d_next)
        if d_next > 0 and abs(d_next - d) < tol * d:
            consecutive += 1
        else:
            consecutive = 0
        d = d_next
        if consecutive >= stable_epochs:
            break
    return Trajectory(demands=demands, decisions=decisions, terminated_at=terminated_at)


def _close(x: float, y: float, tol: float) -> bool:
    return math.isclose(x, y, rel_tol=tol, abs_tol=1e-12)


def classify_outcome(
    traj: Trajectory,
    params: MarketParams,
    tol: float = DEFAULT_TOL,
    *,
    match_tol: float = 1e-6,
    stable_epochs: int = STABLE_EPOCHS,
) -> StableOutcome:
    """Classify a simulated trajectory into the asymptotic outcomes.

    Terminated trajectories are no-sponsoring.  Otherwise the final
    ``stable_epochs`` increments must satisfy |d_{t+1}-d_t| < tol*d_t; the
    converged (d, p, b) is then matched against the stable-outcome tuples
    within ``match_tol`` relative.  A converged point matching none of them
    raises ClassificationAmbiguous, which the model rules out.
    """
    if traj.terminated_at is not None:
        return no_sponsoring_outcome()
    ds = traj.demands
    if len(ds) < stable_epochs + 1:
        return StableOutcome(OutcomeKind.UNSTABLE)
    tail = ds[-(stable_epochs + 1):]
    for prev, nxt in zip(tail, tail[1:]):
        if prev <= 0 or abs(nxt - prev) >= tol * prev:
            return StableOutcome(OutcomeKind.UNSTABLE)
    d_conv = ds[-1]
    last = traj.decisions[-1]
    p_conv, b_conv = last.p, last.b
    ratio = params.kappa_u * params.zeta

    mb = max_bit_outcome(params)
    if (
        ratio <= 1.0 + KAPPA_EQ_TOL
        and _close(d_conv, mb.tuple.d, match_tol)
        and _close(p_conv, mb.tuple.p, match_tol)
        and _close(b_conv, mb.tuple.b, match_tol)
    ):
        return mb

    if (
        abs(ratio - 1.0) <= KAPPA_EQ_TOL
        and _close(p_conv, min_quality_price(params), match_tol)
        and _close(b_conv, params.zeta * d_conv, match_tol)
        and 0 < d_conv <= params.max_demand * (1.0 + match_tol)
    ):
        return min_quality_outcome(d_conv, params)

    inner = interior_outcome(params)
    if (
        inner is not None
        and ratio <= 1.0 + KAPPA_EQ_TOL
        and _close(d_conv, inner.tuple.d, match_tol)
        and _close(p_conv, inner.tuple.p, match_tol)
        and _close(b_conv, inner.tuple.b, match_tol)
    ):
        return inner

    raise ClassificationAmbiguous(
        f"converged at (d={d_conv}, p={p_conv}, b={b_conv}) "
        "but no stable-outcome tuple matches"
    )


def format_float(x: float) -> str:
    return f"{x:.12g}"


def write_trajectory_csv(traj: Trajectory, fh: TextIO) -> None:
    """Rows of epoch, d, y, p, z, b; absent values are empty fields."""
    writer = csv.writer(fh)
    writer.writerow(["epoch", "d", "y", "p", "z", "b"])
    for i, d in enumerate(traj.demands):
        if i < len(traj.decisions):
            dec = traj.decisions[i]
            writer.writerow(
                [
                    i,
                    format_float(d),
                    dec.y,
                    "" if dec.p is None else format_float(dec.p),
                    dec.z,
                    "" if dec.b is None else format_float(dec.b),
                ]
            )
        else:
            writer.writerow([i, format_float(d), "", "", "", ""])
