"""Independent reference values used by the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from parisian_ruin.model import ModelParams, critical_point, exact_classical_ruin, std_normal_sf


def last_exceedance_cdf(p: ModelParams, x: float) -> float:
    """Exact ``P(u^2 (e^{-2 d G} - t_u) <= x | ruin)`` with ``G`` the last time ``L > u`` (``T = 0``).

    ``stat <= x`` iff the path exceeds ``u`` at some time after ``t0(x)``.
    From ``t0`` on, the future of ``L`` is a copy of the model with ``c`` and
    ``sigma`` scaled by ``e^{-d t0}``, so the probability is
    ``E[K'(u - L(t0))]`` with ``K'`` the exact classical ruin probability of
    that copy (1 for nonpositive reserve).
    """
    t_star_s, _ = critical_point(p)
    s0 = t_star_s + x / p.u**2
    if s0 <= 0:
        # only paths that stay above u forever: P(L(inf) > u) / K(u)
        tail = std_normal_sf((p.u + p.c / p.delta) / math.sqrt(p.sigma**2 / (2 * p.delta)))
        return tail / exact_classical_ruin(p)
    if s0 >= 1:
        return 1.0
    t0 = -math.log(s0) / (2 * p.delta)
    var = p.sigma**2 * (1 - s0) / (2 * p.delta)
    mean = -(p.c / p.delta) * (1 - math.sqrt(s0))
    scale = math.sqrt(s0)
    sd = math.sqrt(var)

    def k(y: float) -> float:
        if y <= 0:
            return 1.0
        return exact_classical_ruin(ModelParams(y, p.c * scale, p.sigma * scale, p.delta))

    def integrand(z: float) -> float:
        return math.exp(-z * z / 2) / math.sqrt(2 * math.pi) * k(p.u - (mean + sd * z))

    kink = (p.u - mean) / sd
    lo, hi = min(-12.0, kink - 1), max(12.0, kink + 1)
    a, _ = integrate.quad(integrand, lo, kink, limit=200)
    b, _ = integrate.quad(integrand, kink, hi, limit=200)
    return (a + b) / exact_classical_ruin(p)
