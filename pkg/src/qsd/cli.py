"""Command-line interface.

Subcommands: ``epoch`` (one equilibrium epoch at a given demand),
``simulate`` (one trajectory to CSV), ``sweep`` (config-driven batch),
``bargain`` (one Nash bargaining computation), ``verify`` (oracle-agreement
suites).  Exit codes: 0 success, 1 config error, 2 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys
from typing import Optional

from .errors import ClassificationAmbiguous, ConfigError, DomainError, InvalidParams
from .model import MarketParams, cp_utility, validate_params
from .spne import sp_equilibrium_price, spne_epoch
from .dynamics import SimulationMode, format_float, simulate, write_trajectory_csv
from .bargaining import disagreement_payoffs, nbs_solve
from .sweep import Regime, SweepConfig, load_config, write_sweep_csv
from . import verify as verify_mod


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsd",
        description="Quality-sponsored-data market equilibria, dynamics, and bargaining",
    )
    parser.add_argument("--config", help="config file (flat key = value lines)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--threads", type=int, default=1, help="parallel workers for sweeps")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized suites")
    sub = parser.add_subparsers(dest="command", required=True)

    p_epoch = sub.add_parser("epoch", help="solve one equilibrium epoch")
    p_epoch.add_argument("--d", type=float, required=True, help="current demand")

    p_sim = sub.add_parser("simulate", help="simulate one trajectory to CSV")
    p_sim.add_argument("--d0", type=float, default=None, help="initial demand")
    p_sim.add_argument(
        "--mode",
        choices=[m.value for m in Regime][:3],
        default=Regime.SHORT_SHORT.value,
    )
    p_sim.add_argument("--horizon", type=int, default=None)

    sub.add_parser("sweep", help="run a config-driven sweep to CSV")

    p_barg = sub.add_parser("bargain", help="compute one Nash bargaining solution")
    p_barg.add_argument("--w", type=float, default=None, help="CP bargaining power")
    p_barg.add_argument("--d0", type=float, default=None, help="initial demand")

    sub.add_parser("verify", help="run all oracle-agreement suites")
    return parser


def _load(config: Optional[str], require_axes: bool) -> Optional[SweepConfig]:
    if config is None:
        return None
    return load_config(config, require_axes=require_axes)


@contextlib.contextmanager
def _open_out(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _cmd_epoch(args, cfg: Optional[SweepConfig]) -> int:
    params = cfg.base if cfg else MarketParams()
    validate_params(params)
    dec = spne_epoch(args.d, params)
    u_sp = sp_equilibrium_price(args.d, params).u_sp
    u_cp = cp_utility(args.d, dec.b, dec.p, params) if dec.z == 1 else 0.0
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "y", "p", "z", "b", "u_sp", "u_cp"])
        writer.writerow(
            [
                format_float(args.d),
                dec.y,
                "" if dec.p is None else format_float(dec.p),
                dec.z,
                "" if dec.b is None else format_float(dec.b),
                format_float(u_sp),
                format_float(u_cp),
            ]
        )
    return 0


def _cmd_simulate(args, cfg: Optional[SweepConfig]) -> int:
    params = cfg.base if cfg else MarketParams()
    d0 = args.d0 if args.d0 is not None else (cfg.d0 if cfg else 1.0)
    horizon = args.horizon if args.horizon is not None else (cfg.horizon if cfg else None)
    tol = cfg.tol if cfg else None
    kwargs = {}
    if tol is not None:
        kwargs["tol"] = tol
    mode = {
        Regime.SHORT_SHORT.value: SimulationMode.BOTH_SHORT_SIGHTED,
        Regime.LONG_SP.value: SimulationMode.LONG_SIGHTED_SP,
        Regime.LONG_CP.value: SimulationMode.LONG_SIGHTED_CP,
    }[args.mode]
    traj = (
        simulate(d0, params, mode, horizon, **kwargs)
        if horizon is not None
        else simulate(d0, params, mode, **kwargs)
    )
    with _open_out(args.out) as fh:
        write_trajectory_csv(traj, fh)
    return 0


def _cmd_sweep(args, cfg: Optional[SweepConfig]) -> int:
    if cfg is None:
        raise ConfigError("the sweep command requires --config")
    threads = max(1, args.threads)
    with _open_out(args.out) as fh:
        errors = write_sweep_csv(cfg, fh, threads=threads)
    if any(err.startswith("ClassificationAmbiguous") for err in errors):
        print("sweep hit an internal invariant violation", file=sys.stderr)
        return 2
    return 0


def _cmd_bargain(args, cfg: Optional[SweepConfig]) -> int:
    params = cfg.base if cfg else MarketParams()
    validate_params(params)
    w = args.w if args.w is not None else (cfg.w if cfg else 0.5)
    d0 = args.d0 if args.d0 is not None else (cfg.d0 if cfg else 1.0)
    dp = disagreement_payoffs(params, d0)
    sol = nbs_solve(params, w, dp)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "w", "d_cp", "d_sp", "source", "agreed", "d_star", "p_star",
                "u_cp", "u_sp", "u_excess", "w_threshold",
            ]
        )
        writer.writerow(
            [
                format_float(w),
                format_float(dp.d_cp),
                format_float(dp.d_sp),
                dp.source.value,
                int(sol.agreed),
                format_float(sol.d_star),
                "" if sol.p_star is None else format_float(sol.p_star),
                format_float(sol.u_cp),
                format_float(sol.u_sp),
                format_float(sol.u_excess),
                "" if sol.w_threshold != sol.w_threshold else format_float(sol.w_threshold),
            ]
        )
    return 0


def _cmd_verify(args, seed: int) -> int:
    results = verify_mod.run_all(seed)
    ok = True
    with _open_out(args.out) as fh:
        for res in results:
            status = "PASS" if res.passed else "FAIL"
            print(f"{status} {res.name}: {res.detail}", file=fh)
            ok = ok and res.passed
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args.config, require_axes=args.command == "sweep")
        if args.seed is not None:
            seed = args.seed
        elif cfg is not None:
            seed = cfg.seed
        else:
            seed = 0
        if args.command == "epoch":
            return _cmd_epoch(args, cfg)
        if args.command == "simulate":
            return _cmd_simulate(args, cfg)
        if args.command == "sweep":
            return _cmd_sweep(args, cfg)
        if args.command == "bargain":
            return _cmd_bargain(args, cfg)
        if args.command == "verify":
            return _cmd_verify(args, seed)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, InvalidParams, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ClassificationAmbiguous as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
