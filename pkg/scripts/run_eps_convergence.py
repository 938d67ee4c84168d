#!/usr/bin/env python3
"""t=0 convergence of the recovered height and phase-space cloud in eps.

Grid size is tied to eps through N = 1/eps^2; the reference is the analytic
jet height on a fine grid.  Expected: debiased height error ~ O(eps^1.5),
phase-space error ~ O(eps^0.75), debiased below biased throughout.
"""

import argparse
import sys

from swsg.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps-list", default="0.08,0.04,0.02")
    ap.add_argument("--fine-n", type=int, default=64)
    ap.add_argument("--out", default="eps_convergence.txt")
    args = ap.parse_args()
    sys.exit(main(["study", "eps_convergence", "--scenario", "jet",
                   "--tol", "1e-9", "--eps-list", args.eps_list,
                   "--fine-n", str(args.fine_n), "--out", args.out]))
