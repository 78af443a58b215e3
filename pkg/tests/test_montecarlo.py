import csv
import json
import math

import numpy as np
import pytest

from parisian_ruin.model import DomainError, EstimateCI, ModelParams, exact_classical_ruin
from parisian_ruin.montecarlo import (
    MIN_CONDITIONED,
    ExperimentConfig,
    MeanShift,
    RuinTimeLaw,
    compare_report,
    estimate_ruin_prob,
    estimate_ruin_prob_nested,
    estimate_ruin_time_cdf,
    fmt,
    kolmogorov_distance,
    report_document,
    write_report_csv,
    write_report_json,
)
from parisian_ruin.paths import GridSpec, horizon_for_tolerance

UNIT = ModelParams(u=1.0, c=1.0, sigma=1.0, delta=1.0)


def config(p=UNIT, n_paths=4000, seed=11, h=0.01, eps=1e-3, **kw):
    t_max, _ = horizon_for_tolerance(p, eps) if p.delta > 0 else (kw.pop("t_max", 20.0), None)
    return ExperimentConfig(p, GridSpec.with_step(t_max, h), n_paths, seed, **kw)


class TestConfig:
    def test_validation(self):
        g = GridSpec(5.0, 500)
        with pytest.raises(DomainError):
            ExperimentConfig(UNIT, g, 0, 1)
        with pytest.raises(DomainError):
            ExperimentConfig(UNIT, g, 10, 1, sampler="other")
        with pytest.raises(DomainError):
            ExperimentConfig(ModelParams(1, 1, 1, 0), g, 10, 1, sampler="mean_shift")
        with pytest.raises(DomainError):
            ExperimentConfig(ModelParams(1, 1, 1, 1, 0.5), g, 10, 1, monitor="bridge")
        with pytest.raises(DomainError):
            ExperimentConfig(ModelParams(1, 1, 1, 1, 0.001), g, 10, 1)

    def test_describe(self):
        d = config().describe()
        assert d["grid"]["h"] == pytest.approx(0.01)
        assert d["params"]["u"] == 1.0

    def test_single_anchor_is_critical_point(self):
        cfg = config(UNIT.with_u(9.0), sampler="mean_shift", n_anchors=1)
        shift = MeanShift.build(cfg)
        assert shift.size == 1
        assert shift.anchors[0] * cfg.grid.h == pytest.approx(math.log(10), abs=cfg.grid.h)


class TestRuinProb:
    def test_zero_reserve(self):
        # grid monitoring misses the immediate crossing at u = 0; bridge maxima catch it
        est = estimate_ruin_prob(config(UNIT.with_u(0.0), n_paths=1000, monitor="bridge"))
        assert est.value >= 1 - 3 * est.std_err
        assert est.value == 1.0

    def test_exact_delta_one_u_two(self):
        p = UNIT.with_u(2.0)
        est = estimate_ruin_prob(config(p, n_paths=20_000, sampler="mean_shift", monitor="bridge"))
        assert abs(est.value - exact_classical_ruin(p)) <= 3 * est.std_err

    def test_plain_and_mean_shift_agree(self):
        plain = estimate_ruin_prob(config(n_paths=20_000, monitor="bridge"))
        shifted = estimate_ruin_prob(config(n_paths=20_000, monitor="bridge", sampler="mean_shift", seed=12))
        assert plain.extra["hits"] >= 100
        assert abs(plain.value - shifted.value) <= 3 * math.hypot(plain.std_err, shifted.std_err)

    def test_delta_zero(self):
        p = ModelParams(1.0, 1.0, math.sqrt(2.0), 0.0)
        cfg = ExperimentConfig(p, GridSpec(30.0, 3000), 10_000, 3, monitor="bridge")
        est = estimate_ruin_prob(cfg)
        assert abs(est.value - math.exp(-1)) <= 3 * est.std_err

    def test_insufficient_flag(self):
        est = estimate_ruin_prob(config(UNIT.with_u(5.0), n_paths=200))
        assert est.flag == "insufficient"

    def test_workers_do_not_change_result(self):
        cfg = config(n_paths=3000, sampler="mean_shift")
        a, b = estimate_ruin_prob(cfg, workers=1), estimate_ruin_prob(cfg, workers=2)
        assert (a.value, a.std_err, a.extra) == (b.value, b.std_err, b.extra)

    def test_nested_and_reserves(self):
        cfg = ExperimentConfig(UNIT, GridSpec(6.0, 600), 3000, 11)
        fine, coarse = estimate_ruin_prob_nested(cfg, (1, 2))
        assert fine.value == estimate_ruin_prob(cfg).value
        # the coarse grid is a subset of the fine one
        assert coarse.extra["hits"] <= fine.extra["hits"]
        per_u = estimate_ruin_prob_nested(cfg, (1,), reserves=[0.0, 0.5, 1.0, 2.0])
        hits = [r[0].extra["hits"] for r in per_u]
        assert all(b <= a for a, b in zip(hits, hits[1:]))
        assert per_u[2][0].value == fine.value
        with pytest.raises(DomainError):
            estimate_ruin_prob_nested(cfg, (7,))
        with pytest.raises(DomainError):
            estimate_ruin_prob_nested(config(sampler="mean_shift", n_paths=10), (1,), reserves=[1.0])

    def test_window_indicator_monotone(self):
        hits = []
        for t_window in (0.0, 0.05, 0.2):
            p = ModelParams(0.3, 1.0, 1.0, 1.0, t_window)
            hits.append(estimate_ruin_prob(config(p, n_paths=2000)).extra["hits"])
        assert hits[0] >= hits[1] >= hits[2]


class TestRuinTime:
    def test_cdf_properties(self):
        cfg = config(UNIT.with_u(3.0), n_paths=4000, sampler="mean_shift", monitor="bridge")
        xs = [-0.9, -0.5, 0.0, 0.5, 2.0, 1e6]
        res = estimate_ruin_time_cdf(cfg, xs)
        assert res.n_conditioned >= MIN_CONDITIONED and res.flag == ""
        assert np.all(np.diff(res.values) >= 0)
        assert res.values[-1] == pytest.approx(1.0)
        assert len(res.pairs()) == len(xs)
        assert res.law.ess > 0

    def test_insufficient(self):
        res = estimate_ruin_time_cdf(config(UNIT.with_u(4.0), n_paths=300), [0.0])
        assert res.flag == "insufficient"

    def test_domain(self):
        with pytest.raises(DomainError):
            estimate_ruin_time_cdf(config(UNIT.with_u(3.0), n_paths=10), [-1.0])
        with pytest.raises(DomainError):
            estimate_ruin_time_cdf(config(UNIT.with_u(0.0), n_paths=10), [0.0])


class TestKolmogorov:
    def law(self, stats, weights=None):
        # build a law whose statistic equals `stats`: invert u^2 (e^{-2 eta} - t_u) for u = 1
        p = UNIT
        t_u = 0.25
        eta = -0.5 * np.log(np.asarray(stats) + t_u)
        w = np.ones(len(eta)) if weights is None else np.asarray(weights, float)
        return RuinTimeLaw(p, eta, eta, w, len(eta))

    def test_exact_sample_is_close(self):
        x = (np.arange(1, 1001) - 0.5) / 1000 * 0.5  # quantiles of U(0, 0.5)
        d = kolmogorov_distance(self.law(x), lambda v: np.clip(np.asarray(v) / 0.5, 0, 1))
        assert d == pytest.approx(0.0005, abs=1e-9)

    def test_atom_is_matched(self):
        # a sample with a 30% atom at 0.1 against a CDF with the same atom
        law = self.law(np.concatenate([np.full(300, 0.1), np.linspace(0.2, 0.5, 700)]))
        atom = law.stats()[0]  # 0.1 up to rounding in the time round trip

        def cdf(v):
            v = np.asarray(v)
            return np.where(v < atom, 0.0, np.where(v < 0.2, 0.3, 0.3 + 0.7 * np.clip((v - 0.2) / 0.3, 0, 1)))

        assert kolmogorov_distance(law, cdf) < 0.002

    def test_weights(self):
        d = kolmogorov_distance(self.law([0.1, 0.3], [3.0, 1.0]), lambda v: np.where(np.asarray(v) < 0.2, 0.0, 1.0))
        assert d == pytest.approx(0.75)


class TestCompare:
    def test_rows(self, tmp_path):
        base = config(n_paths=2000, monitor="bridge")
        const = EstimateCI(4.677448, 0.0, 1)
        rows = compare_report([2.0, 0.0, 1.0], base, const)
        assert [r.u for r in rows] == [0.0, 1.0, 2.0]
        assert rows[0].exact == 1.0 and rows[0].mc_estimate.value == 1.0
        assert rows[2].exact == pytest.approx(exact_classical_ruin(UNIT.with_u(2.0)))
        dest = tmp_path / "r.csv"
        write_report_csv(rows, dest)
        lines = list(csv.reader(dest.open()))
        assert lines[0] == ["u", "mc", "stderr", "asymptotic", "exact", "ratio"]
        doc = report_document("compare", {"seed": 1, "x": 0.1 + 0.2}, rows)
        write_report_json(doc, tmp_path / "r.json")
        loaded = json.loads((tmp_path / "r.json").read_text())
        assert loaded["config"]["x"] == 0.3
        assert len(loaded["rows"]) == 3

    def test_parisian_rows_have_no_exact(self):
        p = ModelParams(1.0, 1.0, 1.0, 1.0, 0.1)
        rows = compare_report([1.0], config(p, n_paths=500), EstimateCI(2.0, 0.1, 100))
        assert rows[0].exact is None


def test_fmt():
    assert fmt(None) == ""
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(1e-20) == "1e-20"
