import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parisian_ruin.model import DomainError, ModelParams, critical_point
from parisian_ruin.paths import GridSpec, PathSample, sample_path
from parisian_ruin.ruin import (
    RuinOutcome,
    detect_parisian,
    parisian_ruin_time,
    scan_paths,
    sliding_window_min,
    transform_ruin_time,
    window_points,
)
from parisian_ruin.selftest import naive_detect, naive_ruin_indices

HAND = PathSample(times=np.arange(4.0), values=np.array([0.0, 1.5, 1.2, 2.0]))


def params(u=1.0, t_window=0.0, delta=1.0):
    return ModelParams(u=u, c=1.0, sigma=1.0, delta=delta, t_window=t_window)


class TestWindow:
    def test_points(self):
        assert window_points(0.0, 0.1) == 1
        assert window_points(1.0, 1.0) == 2
        assert window_points(0.5, 0.1) == 6
        # rounds up when h does not divide T
        assert window_points(0.25, 0.1) == 4

    def test_unresolvable(self):
        with pytest.raises(DomainError):
            window_points(0.05, 0.1)
        with pytest.raises(DomainError):
            window_points(math.inf, 0.1)

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=40), st.integers(1, 8))
    def test_sliding_min(self, vals, w):
        out = sliding_window_min(vals, w)
        expect = [min(vals[i : i + w]) for i in range(len(vals) - w + 1)]
        assert list(out) == expect


class TestHandExample:
    def test_detect(self):
        assert detect_parisian(HAND, params(t_window=1.0))
        assert not detect_parisian(HAND, params(u=1.5, t_window=1.0))
        assert not detect_parisian(HAND, params(t_window=3.0))

    def test_time(self):
        out = parisian_ruin_time(HAND, params(t_window=1.0))
        assert (out.ruined, out.eta, out.kappa) == (True, 2.0, 0.0)
        assert out.last_start == 2.0
        assert out.eta >= 1.0

    def test_classical(self):
        out = parisian_ruin_time(HAND, params())
        assert out.eta == 1.0 and out.kappa == 0.0
        assert out.last_start == 3.0

    def test_no_ruin(self):
        out = parisian_ruin_time(HAND, params(u=5.0))
        assert out == RuinOutcome(False)
        with pytest.raises(ValueError):
            RuinOutcome(False, eta=1.0)

    def test_ties_are_not_ruin(self):
        path = PathSample(times=np.arange(3.0), values=np.array([0.0, 1.0, 1.0]))
        assert not detect_parisian(path, params())


class TestAgainstNaive:
    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.integers(-3, 3), min_size=2, max_size=30),
        st.integers(-2, 2),
        st.integers(0, 6),
    )
    def test_detect_and_times(self, steps, u, k):
        vals = np.array(steps, dtype=float)
        vals[0] = 0.0
        h = 0.5
        p = ModelParams(u=max(u, 0) * 0.5, c=1.0, sigma=1.0, delta=0.0, t_window=k * h)
        path = PathSample(times=np.arange(len(vals)) * h, values=vals)
        w = window_points(p.t_window, h)
        assert detect_parisian(path, p) == naive_detect(vals, p.u, w)
        first, last = scan_paths(vals[None, :], p.u, w)
        assert (first[0], last[0]) == naive_ruin_indices(vals, p.u, w)
        out = parisian_ruin_time(path, p)
        assert out.ruined == (first[0] >= 0)
        if out.ruined:
            assert out.eta == path.times[first[0]]

    def test_classical_reduction(self):
        g = GridSpec(5.0, 500)
        for seed in range(50):
            path = sample_path(g, params(u=0.3), seed)
            assert detect_parisian(path, params(u=0.3)) == bool(path.values.max() > 0.3)


class TestBridgeMonitor:
    def test_bridge_detects_at_least_grid(self):
        g = GridSpec(5.0, 100)
        p = params(u=0.3)
        for seed in range(30):
            path = sample_path(g, p, seed, bridge=True)
            if detect_parisian(path, p):
                assert detect_parisian(path, p, monitor="bridge")

    def test_rejections(self):
        g = GridSpec(1.0, 10)
        with pytest.raises(ValueError):
            detect_parisian(sample_path(g, params(), 1), params(), monitor="bridge")
        with pytest.raises(DomainError):
            detect_parisian(sample_path(g, params(), 1, bridge=True), params(t_window=0.5), monitor="bridge")
        with pytest.raises(ValueError):
            detect_parisian(HAND, params(), monitor="other")
        with pytest.raises(DomainError):
            scan_paths(np.zeros((1, 3)), 0.0, 2, bridge_max=np.zeros((1, 2)))


class TestTransform:
    def test_zero_at_critical_point(self):
        p = params(u=9.0)
        _, t_star = critical_point(p)
        assert abs(transform_ruin_time(t_star, p)) < 1e-12
        assert transform_ruin_time(math.log(10), p) == transform_ruin_time(0.5 * math.log(100), p)

    def test_limit_and_monotone(self):
        p = params(u=9.0)
        low = transform_ruin_time(1e6, p)
        assert low == pytest.approx(-81 * 0.01)
        assert low > -1.0
        vals = [transform_ruin_time(t, p) for t in np.linspace(0, 10, 50)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_rejects(self):
        with pytest.raises(DomainError):
            transform_ruin_time(1.0, params(delta=0.0))
        with pytest.raises(DomainError):
            transform_ruin_time(1.0, params(u=0.0))

    def test_outcome_carries_stat(self):
        out = parisian_ruin_time(HAND, params(u=1.0, t_window=1.0))
        assert out.transformed_stat == pytest.approx(transform_ruin_time(2.0, params(u=1.0)))
        assert out.transformed_stat > -1.0
