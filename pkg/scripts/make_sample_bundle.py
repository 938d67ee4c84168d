#!/usr/bin/env python3
"""Produce the bundled sample run consumed by the frontend's tests.

A short desk-scale perturbed-jet run (T=3 keeps it under a minute) with the
energy and ageostrophic tables embedded, exported as viz_bundle.json.
"""

import argparse
import shutil
import sys
from pathlib import Path

from swsg.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="runs/sample")
    ap.add_argument("--dest", default="frontend/sample/viz_bundle.json",
                    help="where to copy the finished bundle")
    ap.add_argument("--horizon", type=float, default=3.0)
    args = ap.parse_args()

    rc = main(["simulate", "--scenario", "perturbed_jet",
               "--horizon", str(args.horizon), "--snapshot-every", "0.5",
               "--tol", "1e-9", "--outdir", args.outdir])
    if rc != 0:
        sys.exit(rc)
    for kind in ("energy", "ageostrophic"):
        main(["study", kind, "--run-dir", args.outdir])
    # a coarse convergence table so the bundle feeds every figure kind
    main(["study", "eps_convergence", "--scenario", "jet", "--tol", "1e-9",
          "--eps-list", "0.1,0.07,0.05", "--fine-n", "32",
          "--out", str(Path(args.outdir) / "eps_convergence.txt")])
    main(["render-data", "--run-dir", args.outdir])

    dest = Path(args.dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    shutil.copy(Path(args.outdir) / "viz_bundle.json", dest)
    print(f"sample bundle: {dest}")
    sys.exit(0)
