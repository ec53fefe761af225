"""Brute-force grid verifiers for every closed-form optimum.

These deliberately re-evaluate the primitive utility formulas on dense
grids instead of calling the closed-form solvers, so that agreement between
the two routes is a meaningful check.  The price oracle maps each grid
price through the stage-2 best response (that is the game's structure, not
the solution being tested) and always injects the response-region
breakpoints into the grid so kink optima are hit exactly.

Each oracle reports the achieved objective alongside the argmax; tests
should compare payoffs, not argument positions, to avoid false failures on
flat optima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError
from .model import MarketParams
from .bargaining import DisagreementPoint
from .spne import min_quality_price, no_sponsoring_payoff

DEFAULT_POINTS_1D = 10_000
DEFAULT_POINTS_NBS = 500


class GridScale(Enum):
    LINEAR = "linear"
    LOGARITHMIC = "log"


@dataclass(frozen=True)
class GridSpec:
    points: int
    lo: float
    hi: float
    scale: GridScale = GridScale.LINEAR

    def __post_init__(self):
        if self.points < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.points}")
        if not self.lo < self.hi:
            raise DomainError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.scale is GridScale.LOGARITHMIC and not self.lo > 0:
            raise DomainError("logarithmic grids need lo > 0")

    def values(self) -> np.ndarray:
        if self.scale is GridScale.LOGARITHMIC:
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class BruteCpResult:
    z: int
    b: Optional[float]
    utility: Optional[float]  # best grid utility, kept even when negative


@dataclass(frozen=True)
class BruteSpResult:
    y: int
    p: Optional[float]
    utility: float  # achieved payoff; the no-sponsoring baseline when y = 0


@dataclass(frozen=True)
class BruteNbsResult:
    agreed: bool
    d: Optional[float]
    p: Optional[float]
    objective: Optional[float]
    u_cp: Optional[float]
    u_sp: Optional[float]


def brute_cp_best_response(
    d: float, p: float, params: MarketParams, grid: Optional[GridSpec] = None
) -> BruteCpResult:
    """Grid-maximize the CP utility over feasible bits [zeta*d, n_hat].

    z = 0 when the best utility is negative or the feasible set is empty
    (d > n_hat/zeta).
    """
    if d <= 0:
        raise DomainError(f"demand must be > 0, got {d}")
    lo, hi = params.zeta * d, params.n_hat
    if lo > hi:
        return BruteCpResult(z=0, b=None, utility=None)
    if grid is not None:
        bs = grid.values()
    elif lo == hi:
        bs = np.array([hi])
    else:
        bs = np.linspace(lo, hi, DEFAULT_POINTS_1D)
    u = params.alpha * d * np.log(params.kappa_cp * bs / d) - p * bs
    i = int(np.argmax(u))
    if u[i] < 0:
        return BruteCpResult(z=0, b=None, utility=float(u[i]))
    return BruteCpResult(z=1, b=float(bs[i]), utility=float(u[i]))


def _stage2_bits(ps: np.ndarray, d: float, params: MarketParams) -> np.ndarray:
    """Vectorized stage-2 best response over a price array (join region only)."""
    alpha = params.alpha
    return np.where(
        ps <= alpha * d / params.n_hat,
        params.n_hat,
        np.where(ps <= alpha / params.zeta, alpha * d / ps, params.zeta * d),
    )


def brute_sp_price(
    d: float, params: MarketParams, grid: Optional[GridSpec] = None
) -> BruteSpResult:
    """Grid-maximize the SP payoff over prices in (0, min-quality price].

    Each price is mapped through the CP's best response before evaluating
    the SP utility; y = 0 when even the best price falls short of the
    no-sponsoring baseline.
    """
    if d <= 0:
        raise DomainError(f"demand must be > 0, got {d}")
    baseline = no_sponsoring_payoff(d, params)
    if d > params.max_demand:
        return BruteSpResult(y=0, p=None, utility=baseline)
    p_mq = min_quality_price(params)
    if grid is not None:
        ps = grid.values()
    else:
        ps = np.linspace(p_mq / DEFAULT_POINTS_1D, p_mq, DEFAULT_POINTS_1D)
    kinks = [params.alpha * d / params.n_hat, params.alpha / params.zeta, p_mq]
    kinks = [k for k in kinks if ps[0] <= k <= ps[-1]]
    if kinks:
        ps = np.unique(np.concatenate([ps, np.asarray(kinks)]))
    bs = _stage2_bits(ps, d, params)
    u = ps * bs
    if params.nu1 > 0:
        u = u + params.nu1 * d * np.log(params.kappa_sp * bs / d)
    if params.nu2 > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(
                bs < params.big_n,
                params.kappa_sp * (params.big_n - bs) / params.big_d,
                np.nan,
            )
            term = params.nu2 * params.big_d * np.log(tail)
        u = u + np.where(np.isnan(term), -np.inf, term)
    i = int(np.argmax(u))
    if u[i] < baseline:
        return BruteSpResult(y=0, p=None, utility=baseline)
    return BruteSpResult(y=1, p=float(ps[i]), utility=float(u[i]))


def _feasible_price_values(
    params: MarketParams, dp: DisagreementPoint, ds: np.ndarray
) -> np.ndarray:
    """Default price grid covering the feasible band of Eq.-style constraints.

    On the stable manifold the participation constraints pin, for each
    demand, a price interval [kappa_u*(d_sp - u_s)/d, kappa_u*(u_ad - d_cp)/d];
    the grid spans the union of those intervals (with padding) so that even
    a hair-thin surplus band is resolved.  Falls back to a fixed symmetric
    span when the constraints admit no price at any demand.
    """
    kappa_u = params.kappa_u
    ds_pos = ds[ds > 0]
    fallback_span = 2.0 * params.alpha * kappa_u * max(
        1.0, math.log(params.kappa_cp / kappa_u)
    )
    if ds_pos.size == 0:
        return np.linspace(-fallback_span, fallback_span, DEFAULT_POINTS_NBS)
    bb = ds_pos / kappa_u
    with np.errstate(divide="ignore", invalid="ignore"):
        u_ad = params.alpha * ds_pos * np.log(params.kappa_cp / kappa_u)
        u_s = params.nu1 * ds_pos * np.log(params.kappa_sp / kappa_u)
        if params.nu2 > 0:
            tail_arg = params.kappa_sp * (params.big_n - bb) / params.big_d
            u_s = u_s + np.where(
                tail_arg > 0,
                params.nu2
                * params.big_d
                * np.log(np.where(tail_arg > 0, tail_arg, 1.0)),
                -np.inf,
            )
    p_hi_all = kappa_u * (u_ad - dp.d_cp) / ds_pos
    p_lo_all = kappa_u * (dp.d_sp - u_s) / ds_pos
    keep = np.isfinite(p_hi_all) & np.isfinite(p_lo_all) & (p_lo_all <= p_hi_all)
    if not keep.any():
        return np.linspace(-fallback_span, fallback_span, DEFAULT_POINTS_NBS)
    lo = float(p_lo_all[keep].min())
    hi = float(p_hi_all[keep].max())
    pad = max(1e-9, 0.05 * (hi - lo))
    return np.linspace(lo - pad, hi + pad, DEFAULT_POINTS_NBS)


def brute_nbs(
    params: MarketParams,
    w: float,
    dp: DisagreementPoint,
    d_grid: Optional[GridSpec] = None,
    p_grid: Optional[GridSpec] = None,
) -> BruteNbsResult:
    """Grid-maximize the Nash product over stable demands and prices.

    Payoffs are the primitive utilities evaluated on the stable manifold
    b = d/kappa_u; the feasible region additionally requires each player to
    weakly improve on its disagreement payoff.  When no price grid is
    given, one is derived from the participation constraints themselves so
    the feasible band is always resolved.  Returns no-agreement when the
    feasible grid region is empty.  Argmax ties break toward the lower grid
    index (d-major, then p).
    """
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"bargaining power must lie in [0, 1], got {w}")
    kappa_u = params.kappa_u
    if d_grid is not None:
        ds = d_grid.values()
    else:
        ds = np.linspace(0.0, params.n_hat * kappa_u, DEFAULT_POINTS_NBS)
    if p_grid is not None:
        ps = p_grid.values()
    else:
        ps = _feasible_price_values(params, dp, ds)

    dd, pp = np.meshgrid(ds, ps, indexing="ij")  # rows: d, cols: p
    bb = dd / kappa_u
    with np.errstate(divide="ignore", invalid="ignore"):
        log_q_cp = np.where(dd > 0, np.log(params.kappa_cp * bb / np.where(dd > 0, dd, 1.0)), 0.0)
        u_ad = params.alpha * dd * log_q_cp
        log_q_sp = np.where(dd > 0, np.log(params.kappa_sp * bb / np.where(dd > 0, dd, 1.0)), 0.0)
        u_s = params.nu1 * dd * log_q_sp
        if params.nu2 > 0:
            tail_arg = params.kappa_sp * (params.big_n - bb) / params.big_d
            tail = np.where(tail_arg > 0, np.log(np.where(tail_arg > 0, tail_arg, 1.0)), -np.inf)
            u_s = u_s + params.nu2 * params.big_d * tail
    transfer = pp * bb
    u_cp = u_ad - transfer
    u_sp = transfer + u_s
    gain_cp = u_cp - dp.d_cp
    gain_sp = u_sp - dp.d_sp
    feasible = (gain_cp >= 0) & (gain_sp >= 0) & np.isfinite(u_sp)
    if not feasible.any():
        return BruteNbsResult(False, None, None, None, None, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_prod = w * np.log(gain_cp) + (1.0 - w) * np.log(gain_sp)
    log_prod = np.where(feasible, log_prod, -np.inf)
    flat = int(np.argmax(log_prod))
    if not np.isfinite(log_prod.flat[flat]):
        # every feasible point sits on the zero-surplus boundary
        flat = int(np.argmax(feasible.reshape(-1)))
    i, j = np.unravel_index(flat, log_prod.shape)
    return BruteNbsResult(
        True,
        float(ds[i]),
        float(ps[j]),
        float(np.exp(log_prod[i, j])),
        float(u_cp[i, j]),
        float(u_sp[i, j]),
    )
