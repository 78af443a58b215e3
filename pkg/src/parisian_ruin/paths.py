"""Exact sampling of the claims functional L on uniform time grids."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as _rng
from .model import DomainError, ModelParams

__all__ = [
    "GridSpec",
    "PathSample",
    "cumulative_variance",
    "drift",
    "increment_variance",
    "bridge_maxima",
    "sample_path",
    "sample_paths",
    "sample_bm",
    "horizon_for_tolerance",
    "check_delta0_horizon",
    "write_path_csv",
]


@dataclass(frozen=True)
class GridSpec:
    t_max: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise DomainError(f"t_max must be finite and > 0, got {self.t_max}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise DomainError(f"n_steps must be an integer >= 2, got {self.n_steps}")

    @property
    def h(self) -> float:
        return self.t_max / self.n_steps

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.t_max, self.n_steps * factor)

    @classmethod
    def with_step(cls, t_max: float, h: float) -> "GridSpec":
        return cls(t_max, max(2, int(math.ceil(t_max / h - 1e-9))))


@dataclass(frozen=True)
class PathSample:
    """One trajectory of L on a grid.

    ``bridge_max[i]`` (when present) is a draw of the maximum of L over
    ``[times[i], times[i+1]]`` given the endpoints. ``shift`` is the additive
    deterministic shift that was applied, if any.
    """

    times: np.ndarray
    values: np.ndarray
    bridge_max: np.ndarray | None = None
    shift: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])


def _expm1_ratio(rate: float, t):
    """``(1 - exp(-rate t)) / rate`` with the ``rate -> 0`` limit ``t``."""
    t = np.asarray(t, dtype=float)
    if rate == 0:
        return t
    return -np.expm1(-rate * t) / rate


def cumulative_variance(grid_or_times, p: ModelParams) -> np.ndarray:
    """Var of the driftless part, ``sigma^2 (1 - e^{-2 d t}) / (2 d)``."""
    t = grid_or_times.times() if isinstance(grid_or_times, GridSpec) else np.asarray(grid_or_times)
    return p.sigma**2 * _expm1_ratio(2.0 * p.delta, t)


def drift(grid_or_times, p: ModelParams) -> np.ndarray:
    """Deterministic part ``(c/d)(1 - e^{-d t})`` (``c t`` when ``d = 0``), subtracted from L."""
    t = grid_or_times.times() if isinstance(grid_or_times, GridSpec) else np.asarray(grid_or_times)
    return p.c * _expm1_ratio(p.delta, t)


def increment_variance(grid: GridSpec, p: ModelParams) -> np.ndarray:
    t = grid.times()[:-1]
    return p.sigma**2 * np.exp(-2.0 * p.delta * t) * float(_expm1_ratio(2.0 * p.delta, grid.h))


def bridge_maxima(left: np.ndarray, right: np.ndarray, var: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Maximum of a Brownian bridge from ``left`` to ``right`` with total variance ``var``.

    Inverse-CDF draw: ``P(max > m) = exp(-2 (m - left)(m - right) / var)``.
    """
    gap = right - left
    return 0.5 * (left + right + np.sqrt(gap * gap - 2.0 * var * np.log(uniforms)))


def _check_finite_horizon(p: ModelParams) -> None:
    if math.isinf(p.t_window):
        raise DomainError("an infinite Parisian window cannot be simulated")


def sample_paths(
    grid: GridSpec,
    p: ModelParams,
    n_paths: int,
    seed: int,
    shift: np.ndarray | None = None,
    bridge: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """``n_paths`` trajectories as an array ``(n_paths, n_steps + 1)``.

    Returns ``(values, bridge_max)``; ``bridge_max`` is ``None`` unless
    ``bridge`` is set.
    """
    _check_finite_horizon(p)
    sd = np.sqrt(increment_variance(grid, p))
    m = drift(grid, p)
    values = np.empty((n_paths, grid.n_steps + 1))
    bmax = np.empty((n_paths, grid.n_steps)) if bridge else None
    row = 0
    for k, nb in _rng.blocks(n_paths):
        gen = _rng.block_rng(seed, k, _rng.PATHS)
        z = _rng.step_major_normals(gen, grid.n_steps, nb) * sd
        block = values[row : row + nb]
        block[:, 0] = 0.0
        np.cumsum(z, axis=1, out=block[:, 1:])
        if shift is not None:
            block += shift
        block -= m
        if bridge:
            uni = gen.random((grid.n_steps, nb)).T
            bmax[row : row + nb] = bridge_maxima(block[:, :-1], block[:, 1:], sd * sd, uni)
        row += nb
    return values, bmax


def sample_path(
    grid: GridSpec,
    p: ModelParams,
    seed: int,
    shift: np.ndarray | None = None,
    bridge: bool = False,
) -> PathSample:
    """One exact draw of L on ``grid``; a deterministic function of its arguments."""
    if shift is not None:
        shift = np.asarray(shift, dtype=float)
        if shift.shape != (grid.n_steps + 1,):
            raise ValueError("shift must have one value per grid point")
        if shift[0] != 0:
            raise ValueError("shift must vanish at t = 0")
    values, bmax = sample_paths(grid, p, 1, seed, shift=shift, bridge=bridge)
    return PathSample(
        times=grid.times(),
        values=values[0],
        bridge_max=None if bmax is None else bmax[0],
        shift=shift,
    )


def sample_bm(lambda_horizon: float, n_steps: int, seed: int, n_paths: int | None = None):
    """Standard Brownian motion on ``[0, lambda_horizon]`` with exact increments.

    Returns a ``PathSample`` or, when ``n_paths`` is given, an array of paths.
    """
    if not lambda_horizon > 0:
        raise DomainError("lambda_horizon must be > 0")
    if n_steps < 1:
        raise DomainError("n_steps must be >= 1")
    h = lambda_horizon / n_steps
    count = 1 if n_paths is None else n_paths
    out = np.empty((count, n_steps + 1))
    row = 0
    for k, nb in _rng.blocks(count):
        gen = _rng.block_rng(seed, k, _rng.BROWNIAN)
        block = out[row : row + nb]
        block[:, 0] = 0.0
        np.cumsum(_rng.step_major_normals(gen, n_steps, nb) * math.sqrt(h), axis=1, out=block[:, 1:])
        row += nb
    if n_paths is not None:
        return out
    return PathSample(times=np.arange(n_steps + 1) * h, values=out[0])


def horizon_for_tolerance(p: ModelParams, eps: float, quantum: float = 0.01) -> tuple[float, float]:
    """Shortest horizon (a multiple of ``quantum``) whose residual sd is ``<= eps``.

    The driftless part converges almost surely; after ``t`` its remaining
    standard deviation is ``sqrt(sigma^2 e^{-2 d t} / (2 d))``.

    Returns:
        ``(t_max, residual_sd)``.
    """
    p.require_positive_delta("horizon_for_tolerance")
    if not eps > 0:
        raise DomainError("eps must be > 0")

    def residual(t: float) -> float:
        return math.sqrt(p.sigma**2 * math.exp(-2.0 * p.delta * t) / (2.0 * p.delta))

    t_exact = max(0.0, math.log(p.sigma**2 / (2.0 * p.delta * eps * eps)) / (2.0 * p.delta))
    t_max = max(quantum, math.ceil(t_exact / quantum - 1e-9) * quantum)
    t_max = round(t_max, 12)
    while residual(t_max) > eps * (1 + 1e-12):
        t_max = round(t_max + quantum, 12)
    return t_max, residual(t_max)


def check_delta0_horizon(p: ModelParams, t_max: float, threshold: float = 5.0) -> bool:
    """Warn when the drift has not yet dominated the noise at ``t_max`` (``delta = 0``)."""
    ratio = p.c * t_max / (p.sigma * math.sqrt(t_max))
    if ratio < threshold:
        warnings.warn(
            f"c*t_max/(sigma*sqrt(t_max)) = {ratio:.3g} < {threshold}; the horizon may truncate ruin",
            RuntimeWarning,
            stacklevel=2,
        )
        return False
    return True


def write_path_csv(path: PathSample, dest: str | Path) -> None:
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "L"])
        for t, v in zip(path.times, path.values):
            writer.writerow([f"{t:.9g}", f"{v:.9g}"])
