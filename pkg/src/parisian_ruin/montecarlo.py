"""Ruin-probability and ruin-time estimators with optional importance sampling.

The importance sampler shifts whole paths along covariance profiles. A
shift anchored at grid time ``t_j`` adds ``theta_j * Cov(Z(.), Z(t_j)) /
Var(Z(t_j))`` to the driftless part ``Z``, with ``theta_j = u + m(t_j)`` so
that the shifted mean of ``L`` at the anchor sits on the reserve. Each path
picks one anchor uniformly from a set spread over the times where ruin
concentrates for large ``u``; the likelihood ratio of the mixture is exact
and depends only on ``Z`` at the anchors. A single anchor at the critical
point is the plain one-point mean shift.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng
from .model import (
    DomainError,
    DriftSpec,
    EstimateCI,
    ModelParams,
    asymptotic_parisian_ruin,
    critical_point,
    delta0_asymptotic_parisian,
    delta0_exact_classical,
    exact_classical_ruin,
    local_horizon,
)
from .paths import GridSpec, bridge_maxima, cumulative_variance, drift
from .ruin import scan_paths, window_points

__all__ = [
    "ExperimentConfig",
    "MeanShift",
    "ComparisonRow",
    "RuinTimeLaw",
    "estimate_ruin_prob",
    "estimate_ruin_prob_nested",
    "estimate_ruin_time_cdf",
    "simulate_ruin_times",
    "kolmogorov_distance",
    "compare_report",
    "write_report_csv",
    "report_document",
    "write_report_json",
    "MIN_CONDITIONED",
    "MIN_HITS",
]

MIN_CONDITIONED = 200
MIN_HITS = 10
SAMPLERS = ("plain", "mean_shift")
MONITORS = ("grid", "bridge")


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    grid: GridSpec
    n_paths: int
    seed: int
    sampler: str = "plain"
    conf_level: float = 0.95
    monitor: str = "grid"
    n_anchors: int = 32
    anchor_band: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if self.sampler not in SAMPLERS:
            raise DomainError(f"sampler must be one of {SAMPLERS}")
        if self.monitor not in MONITORS:
            raise DomainError(f"monitor must be one of {MONITORS}")
        if self.sampler == "mean_shift" and self.params.delta <= 0:
            raise DomainError("the mean-shift sampler is anchored at the critical point and needs delta > 0")
        if self.monitor == "bridge" and self.params.t_window != 0:
            raise DomainError("bridge monitoring is only available for classical ruin (T = 0)")
        if self.n_anchors < 1:
            raise DomainError("n_anchors must be >= 1")
        if math.isinf(self.params.t_window):
            raise DomainError("an infinite window cannot be simulated")
        window_points(self.params.t_window, self.grid.h)

    def with_u(self, u: float) -> "ExperimentConfig":
        return replace(self, params=self.params.with_u(u))

    def describe(self) -> dict:
        """Plain-data view of the configuration, for reports."""
        d = asdict(self)
        d["grid"]["h"] = self.grid.h
        d["anchor_band"] = list(self.anchor_band) if self.anchor_band else None
        return d


@dataclass(frozen=True)
class MeanShift:
    """Mixture of one-point mean shifts; see the module docstring."""

    anchors: np.ndarray
    levels: np.ndarray
    variances: np.ndarray
    profiles: np.ndarray

    @classmethod
    def build(cls, cfg: ExperimentConfig) -> "MeanShift":
        p = cfg.params
        n = cfg.grid.n_steps
        times = cfg.grid.times()
        if cfg.n_anchors == 1:
            _, t_star = critical_point(p)
            idx = np.array([int(round(t_star / cfg.grid.h))])
        else:
            lo, hi = cfg.anchor_band or default_anchor_band(p)
            # local scale: (delta/sigma^2) u^2 exp(-2 delta t); large scale = early time
            scale = p.delta * max(p.u, 1e-12) ** 2 / p.sigma**2
            t_early = math.log(scale / hi) / (2.0 * p.delta)
            t_late = math.log(scale / lo) / (2.0 * p.delta)
            idx = np.rint(np.linspace(t_early, t_late, cfg.n_anchors) / cfg.grid.h).astype(np.int64)
        idx = np.unique(np.clip(idx, 1, n))
        V = cumulative_variance(times, p)
        m = drift(times, p)
        va = V[idx]
        profiles = np.minimum(V[None, :], va[:, None]) / va[:, None]
        return cls(anchors=idx, levels=p.u + m[idx], variances=va, profiles=profiles)

    @property
    def size(self) -> int:
        return len(self.anchors)

    def log_weight(self, z_anchor: np.ndarray) -> np.ndarray:
        """``log dP/dQ`` given the shifted driftless values at the anchors."""
        expo = self.levels * z_anchor / self.variances - self.levels**2 / (2.0 * self.variances)
        return -(logsumexp(expo, axis=1) - math.log(self.size))


def default_anchor_band(p: ModelParams) -> tuple[float, float]:
    """Band of the local time scale where large-reserve ruin concentrates."""
    b = DriftSpec.from_params(p).b
    return max(0.05, max(b - 2.0, 0.0) ** 2), (b + 2.0) ** 2


@dataclass
class _Moments:
    """Running count / mean / M2 with Chan's pairwise update."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    hits: int = 0

    def add(self, x: np.ndarray, hits: int) -> None:
        nb = len(x)
        if nb == 0:
            return
        mb = float(np.mean(x))
        m2b = float(np.sum((x - mb) ** 2))
        n = self.n + nb
        d = mb - self.mean
        self.mean += d * nb / n
        self.m2 += m2b + d * d * self.n * nb / n
        self.n = n
        self.hits += hits


def _block(
    cfg: ExperimentConfig,
    shift: MeanShift | None,
    strides: tuple[int, ...],
    reserves: tuple[float, ...],
    k: int,
    nb: int,
    want_times: bool,
):
    p = cfg.params
    grid = cfg.grid
    n = grid.n_steps
    times = grid.times()
    V = cumulative_variance(times, p)
    dv = np.diff(V)
    gen = _rng.block_rng(cfg.seed, k, _rng.PATHS)
    comp = gen.integers(shift.size, size=nb) if shift is not None and shift.size > 1 else None
    Z = np.empty((nb, n + 1))
    Z[:, 0] = 0.0
    np.cumsum(_rng.step_major_normals(gen, n, nb) * np.sqrt(dv), axis=1, out=Z[:, 1:])
    wts = None
    if shift is not None:
        if comp is None:
            Z += shift.levels[0] * shift.profiles[0]
        else:
            Z += shift.levels[comp, None] * shift.profiles[comp]
        wts = np.exp(shift.log_weight(Z[:, shift.anchors]))
    Z -= drift(times, p)
    out = [[None] * len(strides) for _ in reserves]
    for si, stride in enumerate(strides):
        L = Z[:, ::stride]
        bmax = None
        if cfg.monitor == "bridge":
            var = np.diff(V[::stride])
            uni = gen.random((n // stride, nb)).T
            bmax = bridge_maxima(L[:, :-1], L[:, 1:], var, uni)
        w = window_points(p.t_window, grid.h * stride)
        for ri, u in enumerate(reserves):
            first, last = scan_paths(L, u, w, bmax)
            ruined = first >= 0
            if wts is None:
                x = ruined.astype(float)
                weights = np.ones(int(ruined.sum()))
            else:
                x = np.where(ruined, wts, 0.0)
                weights = wts[ruined]
            res = {"x": x, "hits": int(ruined.sum())}
            if want_times:
                ts = times[::stride]
                res["first"] = ts[first[ruined]]
                # still above u at the horizon: the last exceedance never ends
                res["last"] = np.where(L[ruined, -1] > u, np.inf, ts[last[ruined]])
                res["weights"] = weights
            out[ri][si] = res
    return out


def _block_job(args):
    return _block(*args)


def _map_blocks(
    cfg: ExperimentConfig,
    strides: tuple[int, ...],
    want_times: bool,
    workers: int,
    reserves: tuple[float, ...] | None = None,
):
    shift = MeanShift.build(cfg) if cfg.sampler == "mean_shift" else None
    reserves = (cfg.params.u,) if reserves is None else reserves
    jobs = [(cfg, shift, strides, reserves, k, nb, want_times) for k, nb in _rng.blocks(cfg.n_paths)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_block(*job) for job in jobs]
    return shift, results


def _summarise(cfg: ExperimentConfig, results, ri: int, si: int, shift: MeanShift | None) -> EstimateCI:
    mom = _Moments()
    for res in results:
        mom.add(res[ri][si]["x"], res[ri][si]["hits"])
    n = mom.n
    if cfg.sampler == "plain":
        value = mom.hits / n
        se = math.sqrt(value * (1.0 - value) / n)
    else:
        value = mom.mean
        se = math.sqrt(mom.m2 / (n - 1) / n) if n > 1 else 0.0
    extra = {"hits": mom.hits}
    if shift is not None:
        extra["anchors"] = int(shift.size)
    flag = "insufficient" if mom.hits < MIN_HITS else ""
    return EstimateCI(value, se, n, cfg.conf_level, flag=flag, extra=extra)


def estimate_ruin_prob(cfg: ExperimentConfig, workers: int = 1) -> EstimateCI:
    """Probability of (Parisian) ruin on the configured grid.

    Plain sampling reports the hit fraction with a binomial standard error;
    the mean-shift sampler reports the weighted mean of the ruin indicator.
    """
    return estimate_ruin_prob_nested(cfg, (1,), workers)[0]


def estimate_ruin_prob_nested(
    cfg: ExperimentConfig,
    strides: Sequence[int] = (1, 2),
    workers: int = 1,
    reserves: Sequence[float] | None = None,
) -> list:
    """Estimates on the configured grid and on coarsenings of it, from the same paths.

    Stride ``k`` keeps every ``k``-th grid point, i.e. step ``k h``; bridge
    maxima for coarse intervals are drawn from the coarse endpoints. With
    ``reserves`` (plain sampling only) every reserve is scored on the same
    paths and the result is one list of estimates per reserve.
    """
    strides = tuple(int(s) for s in strides)
    for s in strides:
        if s < 1 or cfg.grid.n_steps % s:
            raise DomainError(f"stride {s} does not divide n_steps = {cfg.grid.n_steps}")
    if reserves is None:
        shift, results = _map_blocks(cfg, strides, False, workers)
        return [_summarise(cfg, results, 0, i, shift) for i in range(len(strides))]
    if cfg.sampler != "plain":
        raise DomainError("several reserves can share paths only under plain sampling")
    reserves = tuple(float(u) for u in reserves)
    for u in reserves:
        cfg.params.with_u(u)
    shift, results = _map_blocks(cfg, strides, False, workers, reserves)
    return [[_summarise(cfg, results, ri, i, shift) for i in range(len(strides))] for ri in range(len(reserves))]


@dataclass(frozen=True)
class RuinTimeLaw:
    """Ruin-time samples of the ruined paths, with their (self-normalised) weights.

    ``last`` is the last instant above ``u``; it is ``inf`` for paths that are
    still above ``u`` at the horizon, whose transformed value is then the
    lower end ``-u^2 t_u`` of the statistic's range.
    """

    params: ModelParams
    eta: np.ndarray
    last: np.ndarray
    weights: np.ndarray
    n_paths: int

    @property
    def n_conditioned(self) -> int:
        return len(self.eta)

    @property
    def ess(self) -> float:
        w = self.weights
        return float(w.sum() ** 2 / (w * w).sum()) if len(w) else 0.0

    def stats(self, which: str = "first") -> np.ndarray:
        p = self.params
        t_star_s, _ = critical_point(p)
        t = self.eta if which == "first" else self.last
        return p.u**2 * (np.exp(-2.0 * p.delta * t) - t_star_s)

    def cdf(self, xs, which: str = "first") -> np.ndarray:
        s = self.stats(which)
        w = self.weights / self.weights.sum()
        order = np.argsort(s, kind="stable")
        s, cw = s[order], np.cumsum(w[order])
        idx = np.searchsorted(s, np.asarray(xs, dtype=float), side="right")
        return np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)


def simulate_ruin_times(cfg: ExperimentConfig, workers: int = 1) -> RuinTimeLaw:
    p = cfg.params
    p.require_positive_delta("ruin-time statistics")
    if not p.u > 0:
        raise DomainError("ruin-time statistics need u > 0")
    _, results = _map_blocks(cfg, (1,), True, workers)
    eta = np.concatenate([r[0][0]["first"] for r in results])
    last = np.concatenate([r[0][0]["last"] for r in results])
    w = np.concatenate([r[0][0]["weights"] for r in results])
    return RuinTimeLaw(p, eta, last, w, cfg.n_paths)


@dataclass(frozen=True)
class RuinTimeCDF:
    xs: np.ndarray
    values: np.ndarray
    n_conditioned: int
    flag: str
    law: RuinTimeLaw = field(repr=False)

    def pairs(self) -> list[tuple[float, float]]:
        return [(float(x), float(v)) for x, v in zip(self.xs, self.values)]


def estimate_ruin_time_cdf(cfg: ExperimentConfig, xs: Sequence[float], workers: int = 1) -> RuinTimeCDF:
    """Empirical conditional CDF of ``u^2 (exp(-2 d eta) - t_u)`` given ruin.

    Flagged ``"insufficient"`` below ``MIN_CONDITIONED`` ruined paths.
    """
    xs = np.asarray(xs, dtype=float)
    for x in xs:
        local_horizon(cfg.params, float(x))
    law = simulate_ruin_times(cfg, workers)
    flag = "insufficient" if law.n_conditioned < MIN_CONDITIONED else ""
    values = law.cdf(xs) if law.n_conditioned else np.full(len(xs), np.nan)
    return RuinTimeCDF(xs, values, law.n_conditioned, flag, law)


def kolmogorov_distance(law: RuinTimeLaw, cdf: Callable[[np.ndarray], np.ndarray], which: str = "first") -> float:
    """``sup_x |F_emp(x) - F(x)|``, checked on both sides of every jump of ``F_emp``.

    ``F`` may itself have atoms; the left side of a jump is compared with
    ``F`` just below it.
    """
    s = law.stats(which)
    w = law.weights / law.weights.sum()
    order = np.argsort(s, kind="stable")
    s, w = s[order], w[order]
    # tied samples (e.g. paths still above u at the horizon) form one jump
    jumps, start = np.unique(s, return_index=True)
    cum = np.cumsum(w)
    end = np.append(start[1:], len(s)) - 1
    upper = cum[end]
    lower = upper - np.add.reduceat(w, start)
    f_at = np.asarray(cdf(jumps), dtype=float)
    f_below = np.asarray(cdf(np.nextafter(jumps, -np.inf)), dtype=float)
    return float(max(np.max(np.abs(upper - f_at)), np.max(np.abs(lower - f_below))))


@dataclass(frozen=True)
class ComparisonRow:
    u: float
    mc_estimate: EstimateCI
    asymptotic: float
    exact: float | None
    ratio_mc_over_asym: float


def _exact_value(p: ModelParams) -> float | None:
    if p.t_window != 0:
        return None
    return exact_classical_ruin(p) if p.delta > 0 else delta0_exact_classical(p)


def compare_report(u_values: Sequence[float], base: ExperimentConfig, constants: EstimateCI, workers: int = 1) -> list[ComparisonRow]:
    """One row per reserve: Monte Carlo, asymptotic formula, exact value where known.

    ``constants`` is the infinite-horizon constant for ``delta > 0`` or
    ``F(2 c^2 T / sigma^2)`` for ``delta = 0``. Every reserve reuses the base seed.
    """
    rows = []
    for u in sorted(float(v) for v in u_values):
        cfg = base.with_u(u)
        p = cfg.params
        mc = estimate_ruin_prob(cfg, workers)
        if p.delta > 0:
            asym = asymptotic_parisian_ruin(p, constants).value
        else:
            asym = delta0_asymptotic_parisian(p, constants).value
        ratio = mc.value / asym if asym > 0 else math.nan
        rows.append(ComparisonRow(u, mc, asym, _exact_value(p), ratio))
    return rows


def fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.9g}"


def _num(x):
    return None if x is None else float(f"{x:.9g}")


def write_report_csv(rows: Sequence[ComparisonRow], dest: str | Path) -> None:
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "mc", "stderr", "asymptotic", "exact", "ratio"])
        for r in rows:
            writer.writerow(
                [fmt(r.u), fmt(r.mc_estimate.value), fmt(r.mc_estimate.std_err), fmt(r.asymptotic), fmt(r.exact), fmt(r.ratio_mc_over_asym)]
            )


def _row_dict(r: ComparisonRow) -> dict:
    return {
        "u": _num(r.u),
        "mc": _num(r.mc_estimate.value),
        "stderr": _num(r.mc_estimate.std_err),
        "n_paths": r.mc_estimate.n_reps,
        "hits": r.mc_estimate.extra.get("hits"),
        "flag": r.mc_estimate.flag,
        "asymptotic": _num(r.asymptotic),
        "exact": _num(r.exact),
        "ratio": _num(r.ratio_mc_over_asym),
    }


def _clean(obj):
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def report_document(kind: str, config: dict, rows: Sequence[ComparisonRow] = (), **extra) -> dict:
    doc = {"kind": kind, "config": _clean(config), "rows": [_row_dict(r) for r in rows]}
    doc.update(_clean(extra))
    return doc


def write_report_json(doc: dict, dest: str | Path) -> None:
    Path(dest).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
