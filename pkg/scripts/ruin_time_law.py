"""Conditional law of the transformed ruin time at a finite reserve.

Simulates ruined paths (c = sigma = delta = 1, T = 0) by importance sampling
and compares the empirical CDF of ``u^2 (exp(-2 eta) - t_u)`` with the
large-reserve limit, both for the first-passage time ``eta`` and for the last
exceedance time. For the last exceedance it also evaluates the exact
finite-reserve CDF (the oracle in ``tests/_oracles.py``).

Output: ``results/ruin_time_u<u>.csv`` with columns
``x,first,last,limit,exact_last``.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from _oracles import last_exceedance_cdf  # noqa: E402

from parisian_ruin.model import DriftSpec, ModelParams, critical_point, ruin_time_cdf_asymptotic  # noqa: E402
from parisian_ruin.montecarlo import ExperimentConfig, kolmogorov_distance, simulate_ruin_times  # noqa: E402
from parisian_ruin.paths import GridSpec, horizon_for_tolerance  # noqa: E402
from parisian_ruin.pickands import PickandsQuery, estimate_P_infty  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description="ruin-time law at finite u")
    ap.add_argument("--u", type=float, default=6.0)
    ap.add_argument("--n-paths", type=int, default=50000)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=1729)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    p = ModelParams(u=args.u, c=1.0, sigma=1.0, delta=1.0)
    t_max, _ = horizon_for_tolerance(p, 1e-4)
    cfg = ExperimentConfig(p, GridSpec.with_step(t_max, args.step), args.n_paths, args.seed,
                           sampler="mean_shift", monitor="bridge")
    law = simulate_ruin_times(cfg)
    d = DriftSpec.from_params(p)
    q = PickandsQuery(d.a, d.b, 2.0, n_grid_t=100, n_grid_s=4, n_reps=40000, seed=args.seed)
    p_inf, curve = estimate_P_infty(q, tol=0.01, lambda_max=64.0, monitor="bridge", return_curve=True)
    lower = -(p.c**2) / p.delta**2

    def limit(xs):
        return np.array([ruin_time_cdf_asymptotic(p, float(x), curve, p_inf).value if x > lower else 0.0 for x in xs])

    t_star_s, _ = critical_point(p)
    lowest = -(p.u**2) * t_star_s

    def exact_last(xs):
        return np.array([last_exceedance_cdf(p, float(x)) if x >= lowest else 0.0 for x in xs])

    print(f"conditioned paths {law.n_conditioned}, effective sample size {law.ess:.0f}")
    print(f"u^2 t_u = {p.u**2 * t_star_s:.4f} (limit {p.c**2 / p.delta**2:.4f})")
    print(f"KS first passage vs limit     {kolmogorov_distance(law, limit, 'first'):.4f}")
    print(f"KS last exceedance vs limit   {kolmogorov_distance(law, limit, 'last'):.4f}")
    print(f"KS last exceedance vs exact   {kolmogorov_distance(law, exact_last, 'last'):.4f}")

    xs = np.linspace(lowest, 4.0, 41)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"ruin_time_u{args.u:g}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "first", "last", "limit", "exact_last"])
        for x, f, l, a, e in zip(xs, law.cdf(xs, "first"), law.cdf(xs, "last"), limit(xs), exact_last(xs)):
            w.writerow([f"{x:.6g}", f"{f:.6g}", f"{l:.6g}", f"{a:.6g}", f"{e:.6g}"])


if __name__ == "__main__":
    main()
