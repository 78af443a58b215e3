"""Monte Carlo vs asymptotic vs exact tables for a few model settings.

Each setting is one ``parisian-ruin compare`` run; reports land in
``results/compare_<name>.{csv,json}``.

    python scripts/compare_tables.py [--quick] [--workers N]
"""

from __future__ import annotations

import argparse
from pathlib import Path

from parisian_ruin import cli

SETTINGS = {
    # classical ruin with interest: the exact column is available
    "classical": ["--c", "1", "--sigma", "1", "--delta", "1", "--T", "0", "--sampler", "mean_shift",
                  "--u-values", "0.5,1,2,4,6,8"],
    # Parisian window with interest
    "parisian": ["--c", "1", "--sigma", "1", "--delta", "1", "--T", "0.2", "--sampler", "mean_shift",
                 "--u-values", "1,2,4,6", "--step", "0.005"],
    # no interest: constant from the closed form of F
    "no_interest": ["--c", "1", "--sigma", "1.41421356", "--delta", "0", "--T", "0.5", "--horizon", "60",
                    "--u-values", "0.5,1,2,3", "--step", "0.005"],
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="10x fewer paths and replicates")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_paths, reps = ("10000", "2000") if args.quick else ("100000", "20000")
    for name, flags in SETTINGS.items():
        print(f"== {name}")
        code = cli.main(["compare", *flags, "--n-paths", n_paths, "--reps", reps, "--seed", str(args.seed),
                         "--workers", str(args.workers), "--out", str(out / f"compare_{name}")])
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
