"""Quality-sponsored-data market: equilibria, dynamics, and bargaining."""

from .errors import (
    ClassificationAmbiguous,
    ConfigError,
    DomainError,
    InvalidParams,
    QsdError,
)
from .model import (
    EpochDecision,
    MarketParams,
    Trajectory,
    Variant,
    ad_utility,
    cp_utility,
    demand_update,
    sp_utility,
    user_satisfaction,
    validate_params,
)
from .spne import (
    CpRegion,
    CpResponse,
    PriceCandidate,
    SpDecision,
    cp_best_response,
    min_quality_price,
    no_sponsoring_payoff,
    sp_candidate_prices,
    sp_equilibrium_price,
    spne_epoch,
)
from .dynamics import (
    OutcomeKind,
    SimulationMode,
    StableOutcome,
    classify_outcome,
    long_sighted_cp_ranking,
    long_sighted_sp_target,
    min_quality_optimal_demand,
    simulate,
    stable_point_payoffs,
    write_trajectory_csv,
)
from .bargaining import (
    BargainingSolution,
    DisagreementPoint,
    DisagreementSource,
    disagreement_payoffs,
    excess_profit,
    excess_profit_argmax,
    nbs_solve,
    percent_increase,
)
from .oracle import (
    GridScale,
    GridSpec,
    brute_cp_best_response,
    brute_nbs,
    brute_sp_price,
)
from .sweep import Regime, SweepConfig, load_config, run_sweep, write_sweep_csv

__all__ = [name for name in dir() if not name.startswith("_")]
