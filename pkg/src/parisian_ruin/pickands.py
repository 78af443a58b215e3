"""Monte Carlo estimation of the Pickands-type constants.

For ``f(t) = (sqrt(t) - b)^2`` the finite-horizon constant is

    P[0, lam] = E sup_{t in [0, lam]} inf_{s in [a, 1]} exp(sqrt(2) B(st) - st - f(st)),

estimated on an outer grid of ``[0, lam]`` and an inner grid of ``[a, 1]``
(both endpoints included), with ``B`` simulated on a grid ``n_grid_s`` times
finer than the outer one and linearly interpolated in between. All helpers
keep the outer step fixed when the horizon grows, so estimates for nested
horizons share their random numbers and are monotone replicate by replicate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numba as nb
import numpy as np

from . import rng as _rng
from .model import DomainError, EstimateCI

__all__ = [
    "PickandsQuery",
    "PickandsCurve",
    "functional_exponents",
    "estimate_P",
    "estimate_P_curve",
    "estimate_P_infty",
    "estimate_F",
    "estimate_F_many",
    "write_ladder_csv",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PickandsQuery:
    """Identifies one constant ``P[0, lambda_horizon]`` for window ``a`` and drift ``b``.

    ``n_grid_t`` and ``n_grid_s`` count grid intervals on ``[0, lambda]`` and
    ``[a, 1]``.
    """

    a: float
    b: float
    lambda_horizon: float
    n_grid_t: int = 400
    n_grid_s: int = 8
    n_reps: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.a <= 1.0:
            raise DomainError(f"a must lie in [0, 1], got {self.a}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"b must be finite and > 0, got {self.b}")
        if not self.lambda_horizon >= 0 or not math.isfinite(self.lambda_horizon):
            raise DomainError(f"lambda must be finite and >= 0, got {self.lambda_horizon}")
        if self.n_grid_t < 1 or self.n_grid_s < 1 or self.n_reps < 1:
            raise DomainError("grid sizes and n_reps must be >= 1")

    @property
    def dt(self) -> float:
        return self.lambda_horizon / self.n_grid_t

    @property
    def inner_points(self) -> np.ndarray:
        if self.a == 1.0:
            return np.ones(1)
        return self.a + np.arange(self.n_grid_s + 1) * (1.0 - self.a) / self.n_grid_s


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    # shifting by x[0] makes a constant sample return its value bit for bit
    x0 = x[0]
    d = x - x0
    mean = float(x0 + d.mean())
    se = float(d.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
    return mean, se


@nb.njit(cache=True)
def _running_sup_grid(B, hB_per_dt, dt, n_out, s_pts, b, out):
    """Running sup over outer points of the inner-inf exponent, per replicate."""
    n_rep = B.shape[0]
    n_fine = B.shape[1] - 1
    n_s = s_pts.shape[0]
    for r in range(n_rep):
        best = -np.inf
        for k in range(n_out + 1):
            t = k * dt
            worst = np.inf
            for j in range(n_s):
                s = s_pts[j]
                x = s * t
                pos = s * (k * hB_per_dt)
                i0 = int(math.floor(pos))
                if i0 >= n_fine:
                    i0 = n_fine - 1
                frac = pos - i0
                bx = B[r, i0] + frac * (B[r, i0 + 1] - B[r, i0]) if frac != 0.0 else B[r, i0]
                g = math.sqrt(x) - b
                v = SQRT2 * bx - x - g * g
                if v < worst:
                    worst = v
            if worst > best:
                best = worst
            out[r, k] = best


@nb.njit(cache=True)
def _running_sup_bridge(B, uni, hB, per_out, b, out):
    """Running sup for ``a = 1`` using bridge maxima between fine grid points."""
    n_rep = B.shape[0]
    n_fine = B.shape[1] - 1
    var = 2.0 * hB
    for r in range(n_rep):
        g0 = -b
        best = SQRT2 * B[r, 0] - g0 * g0
        out[r, 0] = best
        left = best
        for i in range(n_fine):
            x = (i + 1) * hB
            g = math.sqrt(x) - b
            right = SQRT2 * B[r, i + 1] - x - g * g
            gap = right - left
            m = 0.5 * (left + right + math.sqrt(gap * gap - 2.0 * var * math.log(uni[r, i])))
            if m > best:
                best = m
            left = right
            if (i + 1) % per_out == 0:
                out[r, (i + 1) // per_out] = best


def functional_exponents(B: np.ndarray, dt: float, n_out: int, n_fine_per_out: int, a: float, n_grid_s: int, b: float):
    """Running sup (over outer points ``k dt``) of the inner-inf exponent.

    ``B`` has shape ``(n_reps, n_out * n_fine_per_out + 1)`` on step
    ``dt / n_fine_per_out``. Column ``k`` of the result is the log of the
    replicate functional on the horizon ``[0, k dt]``.
    """
    B = np.ascontiguousarray(B, dtype=np.float64)
    if B.shape[1] != n_out * n_fine_per_out + 1:
        raise ValueError("Brownian path length does not match the grids")
    s_pts = np.ones(1) if a == 1.0 else a + np.arange(n_grid_s + 1) * (1.0 - a) / n_grid_s
    out = np.empty((B.shape[0], n_out + 1))
    _running_sup_grid(B, float(n_fine_per_out), float(dt), int(n_out), s_pts, float(b), out)
    return out


def _simulate(q: PickandsQuery, n_out: int, keep: np.ndarray, monitor: str, want_curve: bool):
    """Per-replicate functional at outer indices ``keep`` plus optional curve moments."""
    if monitor not in ("grid", "bridge"):
        raise ValueError(f"unknown monitor {monitor!r}")
    if monitor == "bridge" and q.a != 1.0:
        raise DomainError("bridge monitoring needs a = 1 (no inner infimum)")
    per_out = q.n_grid_s
    n_fine = n_out * per_out
    dt = q.dt
    hB = dt / per_out
    vals = np.empty((q.n_reps, len(keep)))
    csum = np.zeros(n_out + 1) if want_curve else None
    csq = np.zeros(n_out + 1) if want_curve else None
    row = 0
    for k, nbk in _rng.blocks(q.n_reps):
        gen = _rng.block_rng(q.seed, k, _rng.PICKANDS)
        B = np.empty((nbk, n_fine + 1))
        B[:, 0] = 0.0
        np.cumsum(_rng.step_major_normals(gen, n_fine, nbk) * math.sqrt(hB), axis=1, out=B[:, 1:])
        if monitor == "bridge":
            uni = np.ascontiguousarray(gen.random((n_fine, nbk)).T)
            expo = np.empty((nbk, n_out + 1))
            _running_sup_bridge(B, uni, hB, per_out, float(q.b), expo)
        else:
            expo = functional_exponents(B, dt, n_out, per_out, q.a, q.n_grid_s, q.b)
        vals[row : row + nbk] = np.exp(expo[:, keep])
        if want_curve:
            e = np.exp(expo)
            csum += e.sum(axis=0)
            csq += (e * e).sum(axis=0)
        row += nbk
    return vals, csum, csq


def estimate_P(q: PickandsQuery, monitor: str = "grid") -> EstimateCI:
    """Sample mean of the discretised sup-inf functional on ``[0, lambda]``."""
    if q.lambda_horizon == 0:
        value = math.exp(-(q.b**2))
        return EstimateCI(value, 0.0, q.n_reps)
    vals, _, _ = _simulate(q, q.n_grid_t, np.array([q.n_grid_t]), monitor, False)
    mean, se = _mean_se(vals[:, 0])
    return EstimateCI(mean, se, q.n_reps)


@dataclass(frozen=True)
class PickandsCurve:
    """``P[0, lam]`` on every outer grid point, from one common-random-number run."""

    lambdas: np.ndarray
    mean: np.ndarray
    std_err: np.ndarray
    n_reps: int

    def __call__(self, lam: float) -> EstimateCI:
        if lam < 0:
            raise DomainError("horizon must be >= 0")
        lam = min(lam, float(self.lambdas[-1]))
        m = float(np.interp(lam, self.lambdas, self.mean))
        s = float(np.interp(lam, self.lambdas, self.std_err))
        return EstimateCI(m, s, self.n_reps)


def estimate_P_curve(q: PickandsQuery, monitor: str = "grid") -> PickandsCurve:
    if q.lambda_horizon == 0:
        raise DomainError("a curve needs lambda > 0")
    _, csum, csq = _simulate(q, q.n_grid_t, np.array([q.n_grid_t]), monitor, True)
    n = q.n_reps
    mean = csum / n
    var = np.maximum(csq / n - mean**2, 0.0) * n / max(n - 1, 1)
    lambdas = np.arange(q.n_grid_t + 1) * q.dt
    return PickandsCurve(lambdas, mean, np.sqrt(var / n), n)


def _ladder(lam0: float, lambda_max: float) -> list[float]:
    rungs = []
    lam = lam0
    while lam <= lambda_max * (1 + 1e-12):
        rungs.append(lam)
        lam *= 2.0
    return rungs or [lambda_max]


def estimate_P_infty(
    q: PickandsQuery,
    tol: float,
    lambda_max: float,
    monitor: str = "grid",
    return_curve: bool = False,
):
    """Infinite-horizon constant from a doubling horizon ladder.

    Ladder rungs ``lambda, 2 lambda, 4 lambda, ... <= lambda_max`` share one
    set of Brownian paths and one outer step. The first rung whose increment
    over its predecessor is below ``max(tol, 2 std_err)`` is returned with
    flag ``"converged"``; otherwise the last rung, flagged
    ``"ladder-exhausted"``. The stopping rule is a heuristic: no convergence
    rate in ``lambda`` is available. The rung table is in ``extra["ladder"]``.
    """
    if not tol > 0:
        raise DomainError("tol must be > 0")
    if q.lambda_horizon == 0 or lambda_max <= 0:
        raise DomainError("the ladder needs lambda > 0 and lambda_max > 0")
    rungs = _ladder(q.lambda_horizon, lambda_max)
    if rungs[0] != q.lambda_horizon:
        q = replace(q, lambda_horizon=rungs[0], n_grid_t=max(1, round(q.n_grid_t * rungs[0] / q.lambda_horizon)))
    dt = q.dt
    steps = [int(round(lam / dt)) for lam in rungs]
    vals, csum, csq = _simulate(q, steps[-1], np.array(steps), monitor, return_curve)
    table = []
    chosen = None
    prev = None
    for i, lam in enumerate(rungs):
        mean, se = _mean_se(vals[:, i])
        converged = prev is not None and abs(mean - prev) < max(tol, 2.0 * se)
        table.append({"lambda": lam, "estimate": mean, "std_err": se, "n_reps": q.n_reps, "converged": converged})
        if converged:
            chosen = i
            break
        prev = mean
    if chosen is None:
        chosen = len(table) - 1
        flag = "ladder-exhausted"
    else:
        flag = "converged"
    row = table[chosen]
    est = EstimateCI(row["estimate"], row["std_err"], q.n_reps, flag=flag, extra={"ladder": table})
    if not return_curve:
        return est
    n = q.n_reps
    mean = csum / n
    var = np.maximum(csq / n - mean**2, 0.0) * n / max(n - 1, 1)
    curve = PickandsCurve(np.arange(steps[-1] + 1) * dt, mean, np.sqrt(var / n), n)
    return est, curve


def write_ladder_csv(est: EstimateCI, dest: str | Path) -> None:
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "estimate", "std_err", "n_reps", "converged"])
        for row in est.extra["ladder"]:
            writer.writerow(
                [
                    f"{row['lambda']:.9g}",
                    f"{row['estimate']:.9g}",
                    f"{row['std_err']:.9g}",
                    row["n_reps"],
                    str(row["converged"]).lower(),
                ]
            )


@nb.njit(cache=True)
def _window_min_sup(Y, k, n_start, out):
    """``max_{i < n_start} min(Y[i : i + k + 1])`` per row, monotone deque."""
    n_rep, m = Y.shape
    dq = np.empty(m, dtype=np.int64)
    for r in range(n_rep):
        head = 0
        tail = 0
        best = -np.inf
        for i in range(n_start + k):
            v = Y[r, i]
            while tail > head and Y[r, dq[tail - 1]] >= v:
                tail -= 1
            dq[tail] = i
            tail += 1
            if dq[head] < i - k:
                head += 1
            if i >= k:
                cur = Y[r, dq[head]]
                if cur > best:
                    best = cur
        out[r] = best


def _direct_F_block(gen, nbk, ks, n_grid, dt):
    n_total = n_grid + max(ks)
    times = np.arange(n_total + 1) * dt
    Y = np.empty((nbk, n_total + 1))
    Y[:, 0] = 0.0
    np.cumsum(_rng.step_major_normals(gen, n_total, nbk) * math.sqrt(dt), axis=1, out=Y[:, 1:])
    Y *= SQRT2
    Y -= times
    lam = n_grid * dt
    cols = []
    for k in ks:
        out = np.empty(nbk)
        _window_min_sup(Y, k, n_grid + 1, out)
        cols.append(np.exp(out) / lam)
    return cols


def _normalized_F_block(gen, nbk, ks, n_grid, dt):
    # two-sided W(t) = sqrt(2) B(t) - |t| on [-lam, lam]; right half first, then left
    z = _rng.step_major_normals(gen, 2 * n_grid, nbk) * math.sqrt(2.0 * dt)
    W = np.empty((nbk, 2 * n_grid + 1))
    W[:, n_grid] = 0.0
    np.cumsum(z[:, :n_grid], axis=1, out=W[:, n_grid + 1 :])
    W[:, :n_grid] = np.cumsum(z[:, n_grid:], axis=1)[:, ::-1]
    W -= np.abs(np.arange(-n_grid, n_grid + 1)) * dt
    mass = dt * np.exp(W).sum(axis=1)
    cols = []
    for k in ks:
        out = np.empty(nbk)
        _window_min_sup(W, k, 2 * n_grid + 1 - k, out)
        cols.append(np.exp(out) / mass)
    return cols


F_METHODS = ("normalized", "direct")


def estimate_F_many(
    t_scaled: list[float],
    lambda_horizon: float,
    n_grid: int,
    n_reps: int,
    seed: int,
    method: str = "normalized",
) -> list[EstimateCI]:
    """``F(T)`` for several windows ``T`` on common Brownian paths.

    ``method="direct"`` averages the defining quantity
    ``(1/lam) sup_{t <= lam} min_{s in [0, T]} exp(sqrt(2) B(t+s) - (t+s))``
    on a grid of step ``lam / n_grid``. Its replicates are heavy-tailed (the
    mean is carried by events of vanishing probability as ``lam`` grows), so
    typical runs land far below the target.

    ``method="normalized"`` (default) uses the shift-invariant representation
    ``F(T) = E[sup_t min_{s in [0, T]} e^{W(t+s)} / int e^{W(t)} dt]`` with
    ``W(t) = sqrt(2) B(t) - |t|`` on ``[-lam, lam]``, whose replicates are
    bounded. Windows round up to whole steps.
    """
    if method not in F_METHODS:
        raise ValueError(f"method must be one of {F_METHODS}")
    if not lambda_horizon > 0 or n_grid < 1 or n_reps < 1:
        raise DomainError("need lambda > 0, n_grid >= 1 and n_reps >= 1")
    if any(not (t >= 0 and math.isfinite(t)) for t in t_scaled):
        raise DomainError("windows must be finite and >= 0")
    dt = lambda_horizon / n_grid
    ks = [0 if t == 0 else int(math.ceil(t / dt - 1e-9)) for t in t_scaled]
    if method == "normalized" and max(ks) > 2 * n_grid:
        raise DomainError("window longer than the simulated range")
    block_fn = _normalized_F_block if method == "normalized" else _direct_F_block
    vals = np.empty((n_reps, len(ks)))
    row = 0
    for blk, nbk in _rng.blocks(n_reps):
        gen = _rng.block_rng(seed, blk, _rng.F_CONSTANT)
        for j, col in enumerate(block_fn(gen, nbk, ks, n_grid, dt)):
            vals[row : row + nbk, j] = col
        row += nbk
    results = []
    for j in range(len(ks)):
        mean, se = _mean_se(vals[:, j])
        results.append(EstimateCI(mean, se, n_reps, extra={"method": method}))
    return results


def estimate_F(
    t_scaled: float,
    lambda_horizon: float,
    n_grid: int,
    n_reps: int,
    seed: int,
    method: str = "normalized",
) -> EstimateCI:
    return estimate_F_many([t_scaled], lambda_horizon, n_grid, n_reps, seed, method)[0]
