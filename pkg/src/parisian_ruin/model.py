"""Model parameters, the time change and the closed-form / asymptotic formulas.

The surplus is

    R(t) = e^{dt} (u + c int_0^t e^{-dv} dv - sigma int_0^t e^{-dv} dB(v)),

and every quantity below is expressed through the claims functional
L(t) = sigma int_0^t e^{-dv} dB(v) - (c/d)(1 - e^{-dt}), so that R(t) < 0
exactly when L(t) > u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special, stats

__all__ = [
    "DomainError",
    "ModelParams",
    "DriftSpec",
    "EstimateCI",
    "std_normal_sf",
    "exact_classical_ruin",
    "delta0_exact_classical",
    "asymptotic_parisian_ruin",
    "delta0_asymptotic_parisian",
    "critical_point",
    "mu_profile",
    "time_change",
    "inverse_time_change",
    "ruin_time_cdf_asymptotic",
    "constant_a1_closed_form",
    "delta0_parisian_constant",
    "local_horizon",
]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a formula."""


@dataclass(frozen=True)
class ModelParams:
    """Brownian risk model with force of interest.

    Attributes:
        u: initial reserve.
        c: premium rate.
        sigma: volatility of the claims.
        delta: force of interest.
        t_window: Parisian window length (``0`` is classical ruin).
    """

    u: float
    c: float
    sigma: float
    delta: float
    t_window: float = 0.0

    def __post_init__(self) -> None:
        for name in ("u", "c", "sigma", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if math.isnan(self.t_window):
            raise DomainError("t_window must not be NaN")
        if self.c <= 0:
            raise DomainError(f"c must be > 0, got {self.c}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if self.delta < 0:
            raise DomainError(f"delta must be >= 0, got {self.delta}")
        if self.u < 0:
            raise DomainError(f"u must be >= 0, got {self.u}")
        if self.t_window < 0:
            raise DomainError(f"t_window must be >= 0, got {self.t_window}")

    def with_u(self, u: float) -> "ModelParams":
        return ModelParams(u, self.c, self.sigma, self.delta, self.t_window)

    def require_positive_delta(self, what: str) -> None:
        if self.delta <= 0:
            raise DomainError(f"{what} requires delta > 0")


@dataclass(frozen=True)
class DriftSpec:
    """Parameters of the limiting constant: drift coefficient ``b`` and window ``a``.

    ``f(t) = (sqrt(t) - b)^2`` and ``a = exp(-2 delta T)``.
    """

    b: float
    a: float

    def __post_init__(self) -> None:
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"b must be finite and > 0, got {self.b}")
        if not 0.0 <= self.a <= 1.0:
            raise DomainError(f"a must lie in [0, 1], got {self.a}")

    @classmethod
    def from_params(cls, p: ModelParams) -> "DriftSpec":
        p.require_positive_delta("DriftSpec")
        b = p.c / (p.sigma * math.sqrt(p.delta))
        a = 0.0 if math.isinf(p.t_window) else math.exp(-2.0 * p.delta * p.t_window)
        return cls(b=b, a=a)

    def f(self, t):
        return (np.sqrt(t) - self.b) ** 2


@dataclass(frozen=True)
class EstimateCI:
    """A point estimate with its standard error.

    ``flag`` carries status strings such as ``"clamped"``, ``"converged"``,
    ``"ladder-exhausted"`` or ``"insufficient"``; empty means nothing to report.
    """

    value: float
    std_err: float
    n_reps: int
    conf_level: float = 0.95
    flag: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.std_err >= 0:
            raise DomainError(f"std_err must be >= 0, got {self.std_err}")
        if self.n_reps < 1:
            raise DomainError(f"n_reps must be positive, got {self.n_reps}")
        if not 0.0 < self.conf_level < 1.0:
            raise DomainError(f"conf_level must lie in (0, 1), got {self.conf_level}")

    @property
    def z(self) -> float:
        return float(stats.norm.ppf(0.5 + 0.5 * self.conf_level))

    @property
    def half_width(self) -> float:
        return self.z * self.std_err

    def interval(self, probability: bool = False) -> tuple[float, float, bool]:
        """Return ``(lo, hi, clamped)``; probabilities are clipped to [0, 1]."""
        lo, hi = self.value - self.half_width, self.value + self.half_width
        if not probability:
            return lo, hi, False
        clamped = lo < 0.0 or hi > 1.0
        return max(lo, 0.0), min(hi, 1.0), clamped


def std_normal_sf(x):
    """Standard normal survival function via ``erfc`` (no ``1 - cdf`` cancellation)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("std_normal_sf requires finite input")
    out = 0.5 * special.erfc(arr / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def _clamp(value: float) -> tuple[float, bool]:
    if value > 1.0:
        return 1.0, True
    if value < 0.0:
        return 0.0, True
    return value, False


def exact_classical_ruin(p: ModelParams) -> float:
    """Infinite-horizon classical ruin probability for ``delta > 0``."""
    p.require_positive_delta("exact_classical_ruin (use delta0_exact_classical)")
    if p.u == 0:
        return 1.0
    x_num = math.sqrt(2.0 * p.delta) * (p.u + p.c / p.delta) / p.sigma
    x_den = math.sqrt(2.0) * p.c / (p.sigma * math.sqrt(p.delta))
    num, den = std_normal_sf(x_num), std_normal_sf(x_den)
    if num > 1e-300 and den > 1e-300:
        return min(1.0, num / den)
    # deep tail: take the ratio in log space
    return min(1.0, math.exp(float(special.log_ndtr(-x_num) - special.log_ndtr(-x_den))))


def delta0_exact_classical(p: ModelParams) -> float:
    if p.delta != 0:
        raise DomainError("delta0_exact_classical requires delta = 0")
    return math.exp(-2.0 * p.c * p.u / p.sigma**2)


def constant_a1_closed_form(b: float) -> float:
    """Infinite-horizon constant for ``a = 1`` in closed form.

    Matching the classical-ruin asymptotic against the exact classical ruin
    probability gives ``exp(-b^2) / Psi(sqrt(2) b)``.
    """
    if not b > 0:
        raise DomainError("b must be > 0")
    return math.exp(-b * b) / std_normal_sf(math.sqrt(2.0) * b)


def delta0_parisian_constant(t_scaled: float) -> float:
    """Closed form of ``F(t_scaled)`` for Brownian motion with drift.

    After the first visit to the reserve, Parisian ruin happens iff an
    excursion above it outlasts the window before the path escapes to
    ``-inf``. Comparing the excursion-length rate with the escape rate gives
    ``g / (1 + g)`` with ``g = phi(r) / r - Psi(r)`` and ``r = sqrt(t_scaled / 2)``.
    """
    if not (t_scaled >= 0 and math.isfinite(t_scaled)):
        raise DomainError("t_scaled must be finite and >= 0")
    if t_scaled == 0:
        return 1.0
    r = math.sqrt(t_scaled / 2.0)
    g = math.exp(-r * r / 2.0) / (math.sqrt(2.0 * math.pi) * r) - std_normal_sf(r)
    return g / (1.0 + g)


def asymptotic_parisian_ruin(p: ModelParams, p_const: EstimateCI) -> EstimateCI:
    """Large-reserve approximation ``const * Psi(sqrt(2 d u^2 + 4 c u) / sigma)``.

    The constant's standard error is carried through multiplicatively.
    """
    p.require_positive_delta("asymptotic_parisian_ruin")
    if not p_const.value > 0:
        raise DomainError("constant estimate must be > 0")
    tail = std_normal_sf(math.sqrt(2.0 * p.delta * p.u**2 + 4.0 * p.c * p.u) / p.sigma)
    value, clamped = _clamp(p_const.value * tail)
    return EstimateCI(
        value=value,
        std_err=p_const.std_err * tail,
        n_reps=p_const.n_reps,
        conf_level=p_const.conf_level,
        flag="clamped" if clamped else "",
    )


def delta0_asymptotic_parisian(p: ModelParams, f_const: EstimateCI) -> EstimateCI:
    """``F(2 c^2 T / sigma^2) * exp(-2 c u / sigma^2)`` for ``delta = 0``."""
    if p.delta != 0:
        raise DomainError("delta0_asymptotic_parisian requires delta = 0")
    factor = math.exp(-2.0 * p.c * p.u / p.sigma**2)
    value, clamped = _clamp(f_const.value * factor)
    return EstimateCI(
        value=value,
        std_err=f_const.std_err * factor,
        n_reps=f_const.n_reps,
        conf_level=f_const.conf_level,
        flag="clamped" if clamped else "",
    )


def critical_point(p: ModelParams) -> tuple[float, float]:
    """Maximiser of the standardised profile, as ``(s, t)`` with ``s = exp(-2 d t)``."""
    p.require_positive_delta("critical_point")
    ratio = (p.delta * p.u + p.c) / p.c
    return ratio**-2, math.log(ratio) / p.delta


def mu_profile(p: ModelParams, t):
    p.require_positive_delta("mu_profile")
    if not p.u > 0:
        raise DomainError("mu_profile requires u > 0")
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("mu_profile requires t in [0, 1]")
    out = (p.sigma / math.sqrt(2.0 * p.delta)) * np.sqrt(1.0 - arr)
    out = out / (1.0 + (p.c / (p.delta * p.u)) * (1.0 - np.sqrt(arr)))
    return float(out) if out.ndim == 0 else out


def time_change(t_original, delta: float):
    """``s = exp(-2 delta t)``, mapping [0, inf) onto (0, 1]."""
    if not delta > 0:
        raise DomainError("time_change requires delta > 0")
    arr = np.asarray(t_original, dtype=float)
    if np.any(arr < 0):
        raise DomainError("time_change requires t >= 0")
    out = np.exp(-2.0 * delta * arr)
    return float(out) if out.ndim == 0 else out


def inverse_time_change(s, delta: float):
    if not delta > 0:
        raise DomainError("inverse_time_change requires delta > 0")
    arr = np.asarray(s, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > 1):
        raise DomainError("inverse_time_change requires s in (0, 1]")
    out = -np.log(arr) / (2.0 * delta)
    return float(out) if out.ndim == 0 else out


def local_horizon(p: ModelParams, x: float) -> float:
    """Constant horizon ``c^2/(sigma^2 d) + d x / sigma^2`` attached to a ruin-time level ``x``."""
    p.require_positive_delta("local_horizon")
    if not x > -(p.c**2) / p.delta**2:
        raise DomainError(f"x must exceed -c^2/delta^2 = {-(p.c**2) / p.delta**2}")
    return p.c**2 / (p.sigma**2 * p.delta) + p.delta * x / p.sigma**2


def ruin_time_cdf_asymptotic(
    p: ModelParams,
    x: float,
    p_curve: Callable[[float], EstimateCI],
    p_inf: EstimateCI,
) -> EstimateCI:
    """Limit conditional CDF of ``u^2 (exp(-2 d eta) - t_u)`` at ``x``.

    Ratio of the finite-horizon constant at ``local_horizon(p, x)`` to the
    infinite-horizon one. The standard error treats the two estimates as
    independent, which overstates it when they share random numbers.
    """
    lam = local_horizon(p, x)
    if not p_inf.value > 0:
        raise DomainError("infinite-horizon constant must be > 0")
    num = p_curve(lam)
    ratio = num.value / p_inf.value
    rel = math.hypot(num.std_err / num.value if num.value else 0.0, p_inf.std_err / p_inf.value)
    value, clamped = _clamp(ratio)
    return EstimateCI(
        value=value,
        std_err=abs(ratio) * rel,
        n_reps=min(num.n_reps, p_inf.n_reps),
        conf_level=p_inf.conf_level,
        flag="clamped" if clamped else "",
    )
