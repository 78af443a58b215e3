"""Brute-force oracles and the self-test suites run by ``parisian-ruin selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as _rng
from .model import (
    ModelParams,
    critical_point,
    delta0_exact_classical,
    exact_classical_ruin,
    std_normal_sf,
    time_change,
    inverse_time_change,
)
from .paths import GridSpec, PathSample, sample_paths
from .pickands import PickandsQuery, estimate_P, estimate_P_infty, functional_exponents
from .ruin import detect_parisian, parisian_ruin_time, scan_paths, transform_ruin_time, window_points

__all__ = ["naive_detect", "naive_ruin_indices", "random_walk_paths", "SuiteResult", "run_all", "SUITES"]


def naive_detect(values, u: float, w: int) -> bool:
    """Double loop over every window start and every point in the window."""
    n = len(values)
    for i in range(n - w + 1):
        if all(values[j] > u for j in range(i, i + w)):
            return True
    return False


def naive_ruin_indices(values, u: float, w: int) -> tuple[int, int]:
    """``(end of first window, start of last window)`` by brute force; ``(-1, -1)`` if none."""
    first = last = -1
    n = len(values)
    for i in range(n - w + 1):
        ok = True
        for j in range(i, i + w):
            if not values[j] > u:
                ok = False
                break
        if ok:
            if first < 0:
                first = i + w - 1
            last = i
    return first, last


def random_walk_paths(n_paths: int, n_steps: int, seed: int) -> np.ndarray:
    """Gaussian random walks started at 0, rounded to 2 decimals so ties with ``u`` occur."""
    gen = _rng.block_rng(seed, 0, _rng.BROWNIAN)
    z = gen.standard_normal((n_paths, n_steps)) * 0.3
    out = np.zeros((n_paths, n_steps + 1))
    np.cumsum(z, axis=1, out=out[:, 1:])
    return np.round(out, 2)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checks: int
    failures: list


class _Checker:
    def __init__(self) -> None:
        self.checks = 0
        self.failures: list[str] = []

    def __call__(self, cond: bool, label: str) -> None:
        self.checks += 1
        if not cond:
            self.failures.append(label)


def _trivial(ck: _Checker) -> None:
    ck(std_normal_sf(0.0) == 0.5, "Psi(0) = 1/2")
    p = ModelParams(u=0.0, c=1.0, sigma=1.0, delta=1.0)
    ck(exact_classical_ruin(p) == 1.0, "exact classical ruin at u = 0 is 1")
    ck(delta0_exact_classical(ModelParams(0.0, 1.0, 1.0, 0.0)) == 1.0, "delta = 0 exact ruin at u = 0 is 1")
    p9 = ModelParams(u=9.0, c=1.0, sigma=1.0, delta=1.0)
    s, t = critical_point(p9)
    ck(abs(s - 0.01) < 1e-15 and abs(t - math.log(10.0)) < 1e-14, "critical point for u = 9")
    ck(abs(transform_ruin_time(t, p9)) < 1e-12, "transformed ruin time vanishes at the critical point")
    ck(time_change(0.0, 0.5) == 1.0 and abs(time_change(math.log(4.0), 1.0) - 1 / 16) < 1e-16, "time change")
    for x in (0.1, 1.0, 10.0):
        ck(abs(inverse_time_change(time_change(x, 0.7), 0.7) - x) <= 1e-14 * x, f"time change round trip at {x}")
    path = PathSample(times=np.arange(4.0), values=np.array([0.0, 1.5, 1.2, 2.0]))
    ck(detect_parisian(path, ModelParams(1.0, 1.0, 1.0, 1.0, t_window=1.0)), "hand example detects ruin")
    out = parisian_ruin_time(path, ModelParams(1.0, 1.0, 1.0, 1.0, t_window=1.0))
    ck(out.eta == 2.0 and out.kappa == 0.0, "hand example eta = 2, kappa = 0")
    b = 1.0
    ck(estimate_P(PickandsQuery(1.0, b, 0.0)).value == math.exp(-b * b), "lambda = 0 gives exp(-b^2)")
    q0 = PickandsQuery(0.0, b, 1.0, n_grid_t=20, n_grid_s=4, n_reps=50, seed=3)
    est = estimate_P_infty(q0, tol=1e-3, lambda_max=8.0)
    ck(
        all(r["estimate"] == math.exp(-b * b) and r["std_err"] == 0.0 for r in est.extra["ladder"]),
        "a = 0 gives exp(-b^2) at every rung",
    )
    ck(est.flag == "converged", "a = 0 ladder converges")


def _oracle(ck: _Checker, n_paths: int = 1000) -> None:
    vals = random_walk_paths(n_paths, 60, seed=11)
    h = 0.1
    times = np.arange(vals.shape[1]) * h
    for t_window in (0.0, 0.1, 0.25, 0.5, 1.0):
        w = window_points(t_window, h)
        p = ModelParams(u=0.5, c=1.0, sigma=1.0, delta=1.0, t_window=t_window)
        first, last = scan_paths(vals, p.u, w)
        bad_detect = bad_eta = 0
        for r in range(n_paths):
            nf, nl = naive_ruin_indices(vals[r], p.u, w)
            path = PathSample(times=times, values=vals[r])
            out = parisian_ruin_time(path, p)
            if detect_parisian(path, p) != naive_detect(vals[r], p.u, w) or (nf >= 0) != out.ruined:
                bad_detect += 1
            if (first[r], last[r]) != (nf, nl):
                bad_eta += 1
            elif nf >= 0 and (out.eta != times[nf] or out.kappa != times[nf - w] or out.last_start != times[nl]):
                bad_eta += 1
        ck(bad_detect == 0, f"detector vs naive scan, T = {t_window}: {bad_detect} mismatches")
        ck(bad_eta == 0, f"ruin times vs naive scan, T = {t_window}: {bad_eta} mismatches")


def _monotone(ck: _Checker) -> None:
    p = ModelParams(u=0.5, c=1.0, sigma=1.0, delta=1.0)
    grid = GridSpec(4.0, 400)
    vals, _ = sample_paths(grid, p, 500, seed=5)
    prev = None
    for u in (0.0, 0.25, 0.5, 1.0):
        hit = scan_paths(vals, u, 1)[0] >= 0
        if prev is not None:
            ck(not np.any(hit & ~prev), f"pathwise ruin monotone in u at u = {u}")
        prev = hit
    prev = None
    for t_window in (0.0, 0.05, 0.1, 0.2):
        hit = scan_paths(vals, 0.25, window_points(t_window, grid.h))[0] >= 0
        if prev is not None:
            ck(not np.any(hit & ~prev), f"pathwise ruin monotone in window at T = {t_window}")
        prev = hit
    q = PickandsQuery(1.0, 1.0, 0.5, n_grid_t=20, n_grid_s=4, n_reps=200, seed=9)
    est = estimate_P_infty(q, tol=1e-12, lambda_max=8.0)
    means = [r["estimate"] for r in est.extra["ladder"]]
    ck(all(b >= a for a, b in zip(means, means[1:])), "constant nondecreasing along the ladder")
    gen = _rng.block_rng(13, 0, _rng.PICKANDS)
    B = np.concatenate([np.zeros((50, 1)), np.cumsum(gen.standard_normal((50, 64)) * math.sqrt(1 / 64), axis=1)], axis=1)
    coarse = functional_exponents(B, 0.25, 4, 16, 1.0, 1, 1.0)[:, -1]
    fine = functional_exponents(B, 0.125, 8, 8, 1.0, 1, 1.0)[:, -1]
    ck(bool(np.all(fine >= coarse)), "outer refinement never lowers the sup")
    inner2 = functional_exponents(B, 0.25, 4, 16, 0.5, 2, 1.0)[:, -1]
    inner4 = functional_exponents(B, 0.25, 4, 16, 0.5, 4, 1.0)[:, -1]
    ck(bool(np.all(inner4 <= inner2)), "inner refinement never raises the inf")


SUITES: dict[str, Callable[[_Checker], None]] = {
    "trivial": _trivial,
    "oracle-equivalence": _oracle,
    "monotone": _monotone,
}


def run_all() -> list[SuiteResult]:
    results = []
    for name, fn in SUITES.items():
        ck = _Checker()
        try:
            fn(ck)
        except Exception as exc:  # a crash inside a suite counts as a failure
            ck(False, f"{type(exc).__name__}: {exc}")
        results.append(SuiteResult(name, not ck.failures, ck.checks, ck.failures))
    return results
