#!/usr/bin/env python3
"""Quartic double-well study: corrected vs uncorrected dynamics.

Runs 20-chain ensembles of FULD and UD at alpha in {1.0, 1.9} with
beta=1, eta=0.01, gamma=10, K=50000, then prints the TV-to-target, mode
locations, and iterate ranges side by side.  Artifacts land in
``out/quartic/<name>/`` and the pairwise comparisons in
``out/quartic/compare_<alpha>.csv``.

Usage: python scripts/reproduce_quartic.py [--out OUT] [--seed SEED]
"""

import argparse
import sys
from pathlib import Path

from fuld import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/quartic"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iterations", type=int, default=50000)
    ap.add_argument("--chains", type=int, default=20)
    ap.add_argument("--cache-dir", type=str, default="tables")
    args = ap.parse_args()

    base = [
        "--potential", "quartic-well",
        "--beta", "1.0",
        "--gamma", "10.0",
        "--eta0", "0.01",
        "--iterations", str(args.iterations),
        "--chains", str(args.chains),
        "--seed", str(args.seed),
        "--bins", "667",
        "--range-lo=-10", "--range-hi=10",
        "--cache-dir", args.cache_dir,
    ]
    runs = {}
    for alpha in ("1.0", "1.9"):
        for dyn in ("fuld", "ud"):
            name = f"{dyn}_a{alpha}"
            outdir = args.out / name
            argv = ["simulate", "--dynamics", dyn, "--alpha", alpha, "--out-dir", str(outdir)]
            argv += base + (["--expect-divergence"] if dyn == "ud" else [])
            print(f"== {name}")
            rc = cli.main(argv)
            if rc not in (cli.EXIT_OK,):
                print(f"run {name} failed with exit code {rc}", file=sys.stderr)
                return rc
            runs[name] = outdir
    for alpha in ("1.0", "1.9"):
        print(f"== compare fuld vs ud at alpha={alpha}")
        cli.main([
            "compare",
            str(runs[f"fuld_a{alpha}"]),
            str(runs[f"ud_a{alpha}"]),
            "--out", str(args.out / f"compare_{alpha}.csv"),
        ])
    return 0


if __name__ == "__main__":
    sys.exit(main())
