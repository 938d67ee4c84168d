#!/usr/bin/env python3
"""Desk-scale stationary jet: simulate, then energy and ageostrophic traces.

The jet is a steady state of the dynamics; the traces quantify how well the
discretization preserves that (y2 drift, energy drift, ageostrophic ratio).
"""

import argparse
import sys

from swsg.cli import main


def run(outdir: str, horizon: float) -> int:
    rc = main(["simulate", "--scenario", "jet", "--horizon", str(horizon),
               "--outdir", outdir])
    if rc != 0:
        return rc
    for kind in ("energy", "ageostrophic"):
        rc = main(["study", kind, "--run-dir", outdir]) or rc
    rc = main(["render-data", "--run-dir", outdir]) or rc
    return rc


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="runs/jet")
    ap.add_argument("--horizon", type=float, default=10.0)
    args = ap.parse_args()
    sys.exit(run(args.outdir, args.horizon))
