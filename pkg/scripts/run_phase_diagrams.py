#!/usr/bin/env python3
"""Asymptotic-outcome phase diagrams over (gamma, nu2).

Produces one CSV per (quality regime, sightedness) combination: the matched
regime kappa_u = 1/zeta and the under-provisioned regime kappa_u = 1/(2*zeta),
each under short-sighted play and under a long-sighted SP or CP.  Outcome
codes: 0 unstable, 1 no sponsoring, 2 maximum-bit, 3 minimum-quality,
4 interior.
"""

import argparse
import pathlib

from qsd import MarketParams
from qsd.oracle import GridSpec
from qsd.sweep import Regime, SweepConfig, write_sweep_csv

AXES = (
    ("gamma", GridSpec(16, 0.25, 3.25)),
    ("nu2", GridSpec(16, 0.5, 24.0)),
)

REGIMES = {
    "short": Regime.SHORT_SHORT,
    "long_sp": Regime.LONG_SP,
    "long_cp": Regime.LONG_CP,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="data", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    bases = {
        "matched": MarketParams(),                  # kappa_u = 1/zeta
        "under": MarketParams(kappa_u=1.0 / 0.6),   # kappa_u = 1/(2*zeta)
    }
    for quality, base in bases.items():
        for label, regime in REGIMES.items():
            cfg = SweepConfig(base=base, axes=AXES, regime=regime)
            path = out_dir / f"phase_{quality}_{label}.csv"
            with open(path, "w", newline="") as fh:
                errors = write_sweep_csv(cfg, fh, threads=args.threads)
            print(f"wrote {path} ({len(errors)} error markers)")


if __name__ == "__main__":
    main()
