import csv
import math
import warnings

import numpy as np
import pytest

from parisian_ruin.model import DomainError, ModelParams
from parisian_ruin.paths import (
    GridSpec,
    check_delta0_horizon,
    cumulative_variance,
    drift,
    horizon_for_tolerance,
    increment_variance,
    sample_bm,
    sample_path,
    sample_paths,
    write_path_csv,
)

P = ModelParams(u=1.0, c=1.0, sigma=1.0, delta=1.0)


def z_within(sample_stat, target, se, k=3.0):
    return abs(sample_stat - target) <= k * se


class TestGridSpec:
    def test_basic(self):
        g = GridSpec(2.0, 4)
        assert g.h == 0.5
        assert list(g.times()) == [0.0, 0.5, 1.0, 1.5, 2.0]
        assert g.refined().n_steps == 8
        assert GridSpec.with_step(5.0, 0.01).n_steps == 500

    @pytest.mark.parametrize("args", [(0.0, 10), (math.inf, 10), (1.0, 1), (1.0, 2.5)])
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            GridSpec(*args)


class TestSamplePath:
    def test_starts_at_zero_and_deterministic(self):
        g = GridSpec(3.0, 30)
        a = sample_path(g, P, seed=5)
        b = sample_path(g, P, seed=5)
        assert a.values[0] == 0.0
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, sample_path(g, P, seed=6).values)

    def test_terminal_variance(self):
        g = GridSpec(2.0, 20)
        vals, _ = sample_paths(g, P, 100_000, seed=1)
        x = vals[:, -1] + drift(g, P)[-1]
        target = (1 - math.exp(-4.0)) / 2
        # sd of the sample variance of a Gaussian is var * sqrt(2 / (n - 1))
        assert z_within(x.var(ddof=1), target, target * math.sqrt(2 / (len(x) - 1)))
        assert z_within(x.mean(), 0.0, math.sqrt(target / len(x)))

    def test_correlation(self):
        g = GridSpec(2.0, 20)
        vals, _ = sample_paths(g, P, 100_000, seed=2)
        z = vals + drift(g, P)
        i, j = 5, 15  # t' = 0.5 < t = 1.5
        s, s_prime = math.exp(-2 * 1.5), math.exp(-2 * 0.5)
        # martingale: corr = sqrt(Var Z(t') / Var Z(t)) = sqrt(1 - s') / sqrt(1 - s)
        target = math.sqrt(1 - s_prime) / math.sqrt(1 - s)
        r = np.corrcoef(z[:, i], z[:, j])[0, 1]
        se = (1 - target**2) / math.sqrt(len(z))
        assert z_within(r, target, se)

    def test_increment_variance_sums_to_cumulative(self):
        g = GridSpec(4.0, 40)
        assert np.sum(increment_variance(g, P)) == pytest.approx(cumulative_variance(g, P)[-1], rel=1e-12)

    def test_delta_zero(self):
        p0 = ModelParams(1.0, 2.0, 3.0, 0.0)
        g = GridSpec(1.0, 10)
        assert np.allclose(increment_variance(g, p0), 9.0 * 0.1)
        assert drift(g, p0)[-1] == pytest.approx(2.0)

    def test_delta_continuity(self):
        g = GridSpec(1.0, 10)
        small = ModelParams(1.0, 1.0, 1.0, 1e-9)
        zero = ModelParams(1.0, 1.0, 1.0, 0.0)
        assert np.allclose(sample_path(g, small, 3).values, sample_path(g, zero, 3).values, atol=1e-7)

    def test_shift(self):
        g = GridSpec(1.0, 4)
        shift = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        base = sample_path(g, P, 4).values
        assert np.allclose(sample_path(g, P, 4, shift=shift).values - base, shift)
        with pytest.raises(ValueError):
            sample_path(g, P, 4, shift=np.ones(5))
        with pytest.raises(ValueError):
            sample_path(g, P, 4, shift=np.zeros(3))

    def test_bridge_maxima_bound_endpoints(self):
        g = GridSpec(1.0, 50)
        path = sample_path(g, P, 8, bridge=True)
        assert np.all(path.bridge_max >= np.maximum(path.values[:-1], path.values[1:]))

    def test_infinite_window_rejected(self):
        with pytest.raises(DomainError):
            sample_paths(GridSpec(1.0, 10), ModelParams(1, 1, 1, 1, t_window=math.inf), 1, 0)


class TestSampleBM:
    def test_examples(self):
        path = sample_bm(4.0, 40, seed=3)
        assert path.values[0] == 0.0
        assert path.h == pytest.approx(0.1)
        vals = sample_bm(4.0, 40, seed=3, n_paths=100_000)
        end = vals[:, -1]
        assert z_within(end.var(ddof=1), 4.0, 4.0 * math.sqrt(2 / (len(end) - 1)))
        inc = np.diff(vals, axis=1)
        z = inc.mean(axis=0) / (math.sqrt(0.1) / math.sqrt(len(vals)))
        assert np.all(np.abs(z) < 4.0)

    def test_invalid(self):
        with pytest.raises(DomainError):
            sample_bm(0.0, 10, 1)
        with pytest.raises(DomainError):
            sample_bm(1.0, 0, 1)


class TestHorizon:
    def test_example(self):
        p = ModelParams(1.0, 1.0, math.sqrt(2.0), 1.0)
        t_max, resid = horizon_for_tolerance(p, math.exp(-5))
        assert t_max == pytest.approx(5.0)
        assert resid <= math.exp(-5) * (1 + 1e-12)

    @pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-8])
    def test_smallest_on_quantum_grid(self, eps):
        t_max, resid = horizon_for_tolerance(P, eps)
        assert resid <= eps * (1 + 1e-12)
        before = math.sqrt(math.exp(-2 * (t_max - 0.01)) / 2)
        assert before > eps or t_max <= 0.01

    def test_rejects(self):
        with pytest.raises(DomainError):
            horizon_for_tolerance(ModelParams(1, 1, 1, 0), 0.1)
        with pytest.raises(DomainError):
            horizon_for_tolerance(P, 0.0)

    def test_delta0_warning(self):
        p = ModelParams(1.0, 1.0, 1.0, 0.0)
        with pytest.warns(RuntimeWarning):
            assert not check_delta0_horizon(p, 4.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert check_delta0_horizon(p, 50.0)


def test_write_path_csv(tmp_path):
    path = sample_path(GridSpec(1.0, 4), P, 1)
    dest = tmp_path / "path.csv"
    write_path_csv(path, dest)
    rows = list(csv.reader(dest.open()))
    assert rows[0] == ["t", "L"]
    assert len(rows) == 6
    assert float(rows[1][1]) == 0.0


def test_refinements_agree_at_shared_instants():
    from scipy.stats import ks_2samp

    coarse, _ = sample_paths(GridSpec(2.0, 10), P, 10_000, seed=21)
    fine, _ = sample_paths(GridSpec(2.0, 40), P, 10_000, seed=22)
    for i in (1, 5, 10):
        assert ks_2samp(coarse[:, i], fine[:, 4 * i]).pvalue > 0.01


def test_increment_variance_continuous_at_delta_zero():
    g = GridSpec(3.0, 30)
    tiny = increment_variance(g, ModelParams(1.0, 1.0, 1.3, 1e-12))
    zero = increment_variance(g, ModelParams(1.0, 1.0, 1.3, 0.0))
    assert np.allclose(tiny, zero, rtol=1e-6, atol=0)
