"""Config-driven batch runner producing the phase-diagram and bargaining CSVs.

A sweep is a cartesian grid over up to three parameter axes laid over a
base parameter set.  Each grid point yields one CSV record: the asymptotic
outcome code for the simulation regimes, or the bargaining solution fields
for the cooperative regimes.  Invalid grid points are emitted with an error
marker rather than skipped, and records always appear in row-major axis
order regardless of the parallelism degree.

Config files are flat ``key = value`` lines with dotted keys, e.g.::

    regime = short_short
    base.kappa_u = 3.3333333333333335
    axes.gamma.lo = 0.25
    axes.gamma.hi = 3.25
    axes.gamma.points = 16
    axes.nu2.lo = 0.5
    axes.nu2.hi = 24
    axes.nu2.points = 16
"""

from __future__ import annotations

import csv
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields as dataclass_fields, replace
from enum import Enum
from functools import partial
from typing import Dict, Iterator, List, Optional, TextIO, Tuple

from .errors import ClassificationAmbiguous, ConfigError, DomainError, InvalidParams
from .model import MarketParams, Variant, validate_params
from .dynamics import (
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    SimulationMode,
    classify_outcome,
    format_float,
    simulate,
)
from .bargaining import disagreement_payoffs, nbs_solve, percent_increase
from .oracle import GridScale, GridSpec


class Regime(Enum):
    SHORT_SHORT = "short_short"
    LONG_SP = "long_sp"
    LONG_CP = "long_cp"
    BARGAINING = "bargaining"
    PRICE_VS_CAPACITY = "price_vs_capacity"


_REGIME_MODES = {
    Regime.SHORT_SHORT: SimulationMode.BOTH_SHORT_SIGHTED,
    Regime.LONG_SP: SimulationMode.LONG_SIGHTED_SP,
    Regime.LONG_CP: SimulationMode.LONG_SIGHTED_CP,
}

AXIS_NAMES = ("gamma", "nu2", "big_n", "n_hat", "zeta", "kappa_u", "w")

_BARGAIN_FIELDS = [
    "cp_increase_pct",
    "sp_increase_pct",
    "d_star",
    "p_star",
    "u_cp",
    "u_sp",
    "u_excess",
    "w_threshold",
    "agreed",
]
_PRICE_FIELDS = ["p_star", "agreed"]
_OUTCOME_FIELDS = ["outcome"]


@dataclass(frozen=True)
class SweepConfig:
    base: MarketParams
    axes: Tuple[Tuple[str, GridSpec], ...]
    regime: Regime
    d0: float = 1.0
    horizon: int = DEFAULT_HORIZON
    tol: float = DEFAULT_TOL
    seed: int = 0
    w: float = 0.5

    def result_fields(self) -> List[str]:
        if self.regime is Regime.BARGAINING:
            return _BARGAIN_FIELDS
        if self.regime is Regime.PRICE_VS_CAPACITY:
            return _PRICE_FIELDS
        return _OUTCOME_FIELDS

    def columns(self) -> List[str]:
        return [name for name, _ in self.axes] + self.result_fields() + ["error"]


# ---------------------------------------------------------------------------
# config parsing

_PARAM_FIELDS = {f.name for f in dataclass_fields(MarketParams)}
_TOP_LEVEL = {"regime", "d0", "horizon", "tol", "seed", "w"}


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected a number, got '{raw}'") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got '{raw}'") from None


def load_config(source, require_axes: bool = True) -> SweepConfig:
    """Parse a sweep config from a file path or raw config text.

    Unknown or duplicate keys are rejected; missing keys fall back to the
    canonical base parameters and engine defaults.  ``require_axes=False``
    admits axis-free configs for the single-point CLI commands.
    """
    text = None
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, (str, os.PathLike)):
        candidate = os.fspath(source)
        if "\n" not in candidate and "=" not in candidate:
            if not os.path.exists(candidate):
                raise ConfigError(f"config file not found: {candidate}")
            with open(candidate, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = candidate
    if text is None:
        raise ConfigError(f"cannot read config from {source!r}")

    entries: Dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{raw_line.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        entries[key] = value

    base_kwargs = {}
    axis_props: Dict[str, Dict[str, str]] = {}
    top: Dict[str, str] = {}
    for key, value in entries.items():
        parts = key.split(".")
        if parts[0] == "base" and len(parts) == 2:
            if parts[1] not in _PARAM_FIELDS:
                raise ConfigError(f"unknown parameter field in key '{key}'")
            base_kwargs[parts[1]] = value
        elif parts[0] == "axes" and len(parts) == 3:
            axis, prop = parts[1], parts[2]
            if axis not in AXIS_NAMES:
                raise ConfigError(f"unknown sweep axis in key '{key}'")
            if prop not in ("lo", "hi", "points", "scale"):
                raise ConfigError(f"unknown axis property in key '{key}'")
            axis_props.setdefault(axis, {})[prop] = value
        elif len(parts) == 1 and key in _TOP_LEVEL:
            top[key] = value
        else:
            raise ConfigError(f"unknown key '{key}'")

    params_kwargs = {}
    for name, raw in base_kwargs.items():
        if name == "variant":
            try:
                params_kwargs[name] = Variant(raw)
            except ValueError:
                raise ConfigError(
                    f"key 'base.variant': expected one of "
                    f"{[v.value for v in Variant]}, got '{raw}'"
                ) from None
        else:
            params_kwargs[name] = _parse_float(f"base.{name}", raw)
    base = MarketParams(**params_kwargs)

    axes: List[Tuple[str, GridSpec]] = []
    for axis, props in axis_props.items():
        for needed in ("lo", "hi", "points"):
            if needed not in props:
                raise ConfigError(f"axis '{axis}' is missing 'axes.{axis}.{needed}'")
        scale = GridScale.LINEAR
        if "scale" in props:
            try:
                scale = GridScale(props["scale"])
            except ValueError:
                raise ConfigError(
                    f"key 'axes.{axis}.scale': expected one of "
                    f"{[s.value for s in GridScale]}, got '{props['scale']}'"
                ) from None
        try:
            spec = GridSpec(
                points=_parse_int(f"axes.{axis}.points", props["points"]),
                lo=_parse_float(f"axes.{axis}.lo", props["lo"]),
                hi=_parse_float(f"axes.{axis}.hi", props["hi"]),
                scale=scale,
            )
        except DomainError as exc:
            raise ConfigError(f"axis '{axis}': {exc}") from None
        axes.append((axis, spec))
    if require_axes and not axes:
        raise ConfigError("at least one sweep axis is required")
    if len(axes) > 3:
        raise ConfigError(f"at most 3 sweep axes are supported, got {len(axes)}")

    regime = Regime.SHORT_SHORT
    if "regime" in top:
        try:
            regime = Regime(top["regime"])
        except ValueError:
            raise ConfigError(
                f"key 'regime': expected one of {[r.value for r in Regime]}, "
                f"got '{top['regime']}'"
            ) from None

    return SweepConfig(
        base=base,
        axes=tuple(axes),
        regime=regime,
        d0=_parse_float("d0", top["d0"]) if "d0" in top else 1.0,
        horizon=_parse_int("horizon", top["horizon"]) if "horizon" in top else DEFAULT_HORIZON,
        tol=_parse_float("tol", top["tol"]) if "tol" in top else DEFAULT_TOL,
        seed=_parse_int("seed", top["seed"]) if "seed" in top else 0,
        w=_parse_float("w", top["w"]) if "w" in top else 0.5,
    )


# ---------------------------------------------------------------------------
# execution


def _evaluate_point(cfg: SweepConfig, values: Tuple[float, ...]) -> Dict[str, object]:
    axis_names = [name for name, _ in cfg.axes]
    record: Dict[str, object] = dict(zip(axis_names, values))
    for field in cfg.result_fields():
        record[field] = None
    record["error"] = ""
    overrides = dict(zip(axis_names, values))
    w = overrides.pop("w", cfg.w)
    params = replace(cfg.base, **overrides)
    try:
        validate_params(params)
        if cfg.regime in _REGIME_MODES:
            traj = simulate(
                cfg.d0, params, _REGIME_MODES[cfg.regime], cfg.horizon, tol=cfg.tol
            )
            outcome = classify_outcome(traj, params, cfg.tol)
            record["outcome"] = outcome.kind.value
        else:
            dp = disagreement_payoffs(params, cfg.d0, horizon=cfg.horizon, tol=cfg.tol)
            sol = nbs_solve(params, w, dp)
            record["d_star"] = sol.d_star
            record["p_star"] = sol.p_star
            record["u_cp"] = sol.u_cp
            record["u_sp"] = sol.u_sp
            record["u_excess"] = sol.u_excess
            record["w_threshold"] = sol.w_threshold
            record["agreed"] = int(sol.agreed)
            if cfg.regime is Regime.BARGAINING:
                record["cp_increase_pct"] = (
                    0.0 if sol.u_cp == dp.d_cp else percent_increase(dp.d_cp, sol.u_cp)
                )
                record["sp_increase_pct"] = (
                    0.0 if sol.u_sp == dp.d_sp else percent_increase(dp.d_sp, sol.u_sp)
                )
            else:
                for extra in set(_BARGAIN_FIELDS) - set(_PRICE_FIELDS):
                    record.pop(extra, None)
    except InvalidParams as exc:
        record["error"] = f"InvalidParams: {exc}"
    except ClassificationAmbiguous as exc:
        record["error"] = f"ClassificationAmbiguous: {exc}"
    except DomainError as exc:
        record["error"] = f"DomainError: {exc}"
    return record


def grid_points(cfg: SweepConfig) -> List[Tuple[float, ...]]:
    """Cartesian grid in row-major order of the declared axes."""
    value_lists = [[float(v) for v in spec.values()] for _, spec in cfg.axes]
    return list(itertools.product(*value_lists))


def run_sweep(cfg: SweepConfig, threads: int = 1) -> Iterator[Dict[str, object]]:
    """Yield one record per grid point, in deterministic row-major order.

    Grid evaluation itself is deterministic; ``seed`` is carried in the
    config only for the randomized verification suites.
    """
    points = grid_points(cfg)
    if threads <= 1 or len(points) <= 1:
        for values in points:
            yield _evaluate_point(cfg, values)
        return
    chunksize = max(1, len(points) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(partial(_evaluate_point, cfg), points, chunksize=chunksize)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if value != value:  # NaN renders as an absent field
            return ""
        return format_float(value)
    return str(value)


def write_sweep_csv(cfg: SweepConfig, out: TextIO, threads: int = 1) -> List[str]:
    """Run the sweep and write its CSV; returns any error markers seen."""
    writer = csv.writer(out)
    columns = cfg.columns()
    writer.writerow(columns)
    errors: List[str] = []
    for record in run_sweep(cfg, threads=threads):
        writer.writerow([_format_cell(record.get(col)) for col in columns])
        if record["error"]:
            errors.append(str(record["error"]))
    return errors
