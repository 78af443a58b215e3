"""Classical and Parisian ruin detection on sampled paths.

Ruin means ``L > u`` strictly; a Parisian ruin needs ``w`` consecutive grid
points above ``u`` where ``w - 1`` grid steps cover the window ``T``
(rounded up to the next grid multiple, so the detected event can only be
rarer than the continuous one).

The ruin time is the right end of the first completed window; by the
first-completed-excursion reading of the definition this is the first ``t``
with ``t - kappa >= T`` and ``L(t) > u``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numba as nb
import numpy as np

from .model import DomainError, ModelParams, critical_point
from .paths import PathSample

__all__ = [
    "RuinOutcome",
    "window_points",
    "sliding_window_min",
    "detect_parisian",
    "parisian_ruin_time",
    "transform_ruin_time",
    "scan_paths",
]


@dataclass(frozen=True)
class RuinOutcome:
    """Result of scanning one path.

    ``last_start`` is the start of the last window spent above ``u`` (for
    classical ruin, the last instant above ``u``) and ``last_stat`` its
    transformed value.
    """

    ruined: bool
    eta: float | None = None
    kappa: float | None = None
    transformed_stat: float | None = None
    last_start: float | None = None
    last_stat: float | None = None

    def __post_init__(self) -> None:
        if not self.ruined and any(
            v is not None for v in (self.eta, self.kappa, self.transformed_stat, self.last_start, self.last_stat)
        ):
            raise ValueError("a path without ruin carries no ruin times")


def window_points(t_window: float, h: float) -> int:
    """Number of grid points a window of length ``t_window`` spans."""
    if t_window == 0:
        return 1
    if math.isinf(t_window):
        raise DomainError("an infinite window cannot be detected on a grid")
    if h > t_window:
        raise DomainError(f"grid step {h} does not resolve window {t_window}")
    return int(math.ceil(t_window / h - 1e-9)) + 1


def sliding_window_min(values, w: int) -> np.ndarray:
    """Minimum of every length-``w`` window, via a monotone deque in O(n)."""
    vals = list(map(float, values))
    if w < 1:
        raise ValueError("window must hold at least one point")
    out = []
    dq: deque[int] = deque()
    for i, v in enumerate(vals):
        while dq and vals[dq[-1]] >= v:
            dq.pop()
        dq.append(i)
        if dq[0] <= i - w:
            dq.popleft()
        if i >= w - 1:
            out.append(vals[dq[0]])
    return np.asarray(out)


def _check_monitor(path: PathSample, p: ModelParams, monitor: str) -> None:
    if monitor not in ("grid", "bridge"):
        raise ValueError(f"unknown monitor {monitor!r}")
    if monitor == "bridge":
        if p.t_window != 0:
            raise DomainError("bridge monitoring is only available for classical ruin (T = 0)")
        if path.bridge_max is None:
            raise ValueError("path was sampled without bridge maxima")


def detect_parisian(path: PathSample, p: ModelParams, monitor: str = "grid") -> bool:
    """True iff some window of grid points lies strictly above ``u``.

    With ``monitor="bridge"`` (classical ruin only) the sampled inter-grid
    maxima are used instead of the grid values.
    """
    _check_monitor(path, p, monitor)
    if monitor == "bridge":
        return bool(np.any(path.bridge_max > p.u))
    w = window_points(p.t_window, path.h)
    if w > len(path.values):
        return False
    return bool(np.any(sliding_window_min(path.values, w) > p.u))


def transform_ruin_time(eta: float, p: ModelParams) -> float:
    """``u^2 (exp(-2 d eta) - t_u)``; decreasing in ``eta``."""
    p.require_positive_delta("transform_ruin_time")
    if not p.u > 0:
        raise DomainError("transform_ruin_time requires u > 0")
    t_star_s, _ = critical_point(p)
    return p.u**2 * (math.exp(-2.0 * p.delta * eta) - t_star_s)


def _outcome(times, first, last_start, w_back, p: ModelParams) -> RuinOutcome:
    if first < 0:
        return RuinOutcome(False)
    eta = float(times[first])
    kappa = float(times[first - w_back])
    last = float(times[last_start])
    stat = last_stat = None
    if p.delta > 0 and p.u > 0:
        stat = transform_ruin_time(eta, p)
        last_stat = transform_ruin_time(last, p)
    return RuinOutcome(True, eta, kappa, stat, last, last_stat)


def parisian_ruin_time(path: PathSample, p: ModelParams, monitor: str = "grid") -> RuinOutcome:
    """Ruin time at grid resolution.

    ``eta`` is the right end of the first window above ``u`` and ``kappa``
    the last grid instant before it with ``L <= u``. Under bridge monitoring
    the crossing interval is reported by its right end.
    """
    _check_monitor(path, p, monitor)
    if monitor == "bridge":
        hits = np.flatnonzero(path.bridge_max > p.u)
        if hits.size == 0:
            return RuinOutcome(False)
        return _outcome(path.times, int(hits[0]) + 1, int(hits[-1]), 1, p)
    w = window_points(p.t_window, path.h)
    if w > len(path.values):
        return RuinOutcome(False)
    above = np.flatnonzero(sliding_window_min(path.values, w) > p.u)
    if above.size == 0:
        return RuinOutcome(False)
    first_start = int(above[0])
    return _outcome(path.times, first_start + w - 1, int(above[-1]), w, p)


@nb.njit(cache=True)
def _scan_grid(values, u, w, first, last):
    n, m = values.shape
    for r in range(n):
        run = 0
        f = -1
        g = -1
        for i in range(m):
            if values[r, i] > u:
                run += 1
            else:
                run = 0
            if run >= w:
                if f < 0:
                    f = i
                g = i - w + 1
        first[r] = f
        last[r] = g


@nb.njit(cache=True)
def _scan_bridge(bmax, u, first, last):
    n, m = bmax.shape
    for r in range(n):
        f = -1
        g = -1
        for i in range(m):
            if bmax[r, i] > u:
                if f < 0:
                    f = i + 1
                g = i
        first[r] = f
        last[r] = g


def scan_paths(values: np.ndarray, u: float, w: int, bridge_max: np.ndarray | None = None):
    """Vectorised scan of many paths.

    Returns ``(first_end, last_start)`` grid indices, ``-1`` where no ruin.
    Run-length counting here is equivalent to the sliding-window minimum.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    first = np.empty(n, dtype=np.int64)
    last = np.empty(n, dtype=np.int64)
    if bridge_max is not None:
        if w != 1:
            raise DomainError("bridge monitoring is only available for classical ruin (T = 0)")
        _scan_bridge(np.ascontiguousarray(bridge_max, dtype=np.float64), float(u), first, last)
    else:
        _scan_grid(values, float(u), int(w), first, last)
    return first, last
