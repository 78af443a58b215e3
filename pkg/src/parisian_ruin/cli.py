"""Command-line front end: ``parisian-ruin <command> [flags]``.

Every command accepts ``--config FILE`` with flat ``key=value`` lines (keys
are flag names, ``-`` or ``_`` alike); flags given on the command line win.
The default seed is taken from ``RUIN_SEED`` when set. Exit codes: 0 on
success, 2 on usage or domain errors, 3 when a self-test invariant fails.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .model import (
    DomainError,
    DriftSpec,
    EstimateCI,
    ModelParams,
    delta0_exact_classical,
    delta0_parisian_constant,
    exact_classical_ruin,
    local_horizon,
    ruin_time_cdf_asymptotic,
)
from .montecarlo import (
    ExperimentConfig,
    compare_report,
    estimate_ruin_prob,
    estimate_ruin_time_cdf,
    fmt,
    kolmogorov_distance,
    report_document,
    write_report_csv,
    write_report_json,
)
from .paths import GridSpec, check_delta0_horizon, horizon_for_tolerance
from .pickands import PickandsQuery, estimate_F, estimate_P_infty, write_ladder_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3

# keys that steer the run but do not change its numbers
_NOT_REPORTED = ("workers", "out", "config", "command")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _env_seed() -> int:
    raw = os.environ.get("RUIN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"RUIN_SEED must be an integer, got {raw!r}") from exc


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="flat key=value file; flags override it")
    sp.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    sp.add_argument("--seed", type=int, help="base seed (default: RUIN_SEED or 0)")
    sp.add_argument("--out", help="output path prefix for the .csv and .json reports")


def _add_model(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--u", type=float, help="initial reserve")
    sp.add_argument("--c", type=float, help="premium rate")
    sp.add_argument("--sigma", type=float, help="volatility")
    sp.add_argument("--delta", type=float, help="force of interest")
    sp.add_argument("--T", dest="T", type=float, help="Parisian window (0 = classical ruin)")


def _add_sim(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--horizon", type=float, help="simulation horizon t_max (required when delta = 0)")
    sp.add_argument("--eps", type=float, help="residual sd tolerance that sets t_max when delta > 0")
    sp.add_argument("--n-steps", type=int, help="grid steps (overrides --step)")
    sp.add_argument("--step", type=float, help="grid step h")
    sp.add_argument("--n-paths", type=int, help="number of simulated paths")
    sp.add_argument("--sampler", choices=("plain", "mean_shift"))
    sp.add_argument("--monitor", choices=("auto", "grid", "bridge"), help="auto = bridge when T = 0")
    sp.add_argument("--n-anchors", type=int, help="mean-shift anchors")
    sp.add_argument("--conf-level", type=float)


def _add_constant(sp: argparse.ArgumentParser, with_ab: bool) -> None:
    if with_ab:
        sp.add_argument("--a", type=float, help="window parameter exp(-2 delta T)")
        sp.add_argument("--b", type=float, help="drift coefficient c / (sigma sqrt(delta))")
    sp.add_argument("--lambda", dest="lam", type=float, help="first rung of the horizon ladder")
    sp.add_argument("--lambda-max", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--n-grid-t", type=int, help="outer grid intervals on the first rung")
    sp.add_argument("--n-grid-s", type=int, help="inner grid intervals (and Brownian refinement)")
    sp.add_argument("--reps", type=int, help="replicates for the constant")
    sp.add_argument("--const-monitor", choices=("auto", "grid", "bridge"), help="auto = bridge when a = 1")
    sp.add_argument("--f-lambda", type=float, help="horizon for F(T) when delta = 0")
    sp.add_argument("--f-n-grid", type=int, help="grid intervals for F(T)")
    sp.add_argument("--f-method", choices=("normalized", "direct"), help="estimator for F(T)")


_MODEL = {"u": 1.0, "c": 1.0, "sigma": 1.0, "delta": 1.0, "T": 0.0}
_SIM = {
    "horizon": None,
    "eps": 1e-4,
    "n_steps": None,
    "step": 0.01,
    "n_paths": 10000,
    "sampler": "plain",
    "monitor": "auto",
    "n_anchors": 32,
    "conf_level": 0.95,
}
_CONST = {
    "a": None,
    "b": None,
    "lam": 2.0,
    "lambda_max": 32.0,
    "tol": 0.01,
    "n_grid_t": 100,
    "n_grid_s": 8,
    "reps": 10000,
    "const_monitor": "auto",
    "f_lambda": 20.0,
    "f_n_grid": 4000,
    "f_method": "normalized",
}
_COMMON = {"workers": 1, "config": None}

DEFAULTS = {
    "ruin-prob": {**_COMMON, **_MODEL, **_SIM, "out": "ruin_prob"},
    "constant": {**_COMMON, **_MODEL, **_CONST, "out": "constant"},
    "compare": {**_COMMON, **_MODEL, **_SIM, **_CONST, "u_values": [0.5, 1.0, 2.0], "out": "compare"},
    "ruin-time": {
        **_COMMON,
        **_MODEL,
        **_SIM,
        **_CONST,
        "u": 6.0,
        "sampler": "mean_shift",
        "n_paths": 20000,
        "x_values": [-0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
        "out": "ruin_time",
    },
    "selftest": {},
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="parisian-ruin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}
    kw = {"argument_default": argparse.SUPPRESS}

    sp = sub.add_parser("ruin-prob", help="Monte Carlo ruin probability", **kw)
    _add_common(sp)
    _add_model(sp)
    _add_sim(sp)
    subs["ruin-prob"] = sp

    sp = sub.add_parser("constant", help="infinite-horizon constant by a horizon ladder", **kw)
    _add_common(sp)
    _add_model(sp)
    _add_constant(sp, with_ab=True)
    subs["constant"] = sp

    sp = sub.add_parser("compare", help="Monte Carlo vs asymptotic vs exact over several reserves", **kw)
    _add_common(sp)
    _add_model(sp)
    _add_sim(sp)
    _add_constant(sp, with_ab=False)
    sp.add_argument("--u-values", type=_float_list, help="comma-separated reserves")
    subs["compare"] = sp

    sp = sub.add_parser("ruin-time", help="conditional law of the transformed ruin time", **kw)
    _add_common(sp)
    _add_model(sp)
    _add_sim(sp)
    _add_constant(sp, with_ab=False)
    sp.add_argument("--x-values", type=_float_list, help="comma-separated levels x")
    subs["ruin-time"] = sp

    sp = sub.add_parser("selftest", help="run the built-in invariant suites", **kw)
    subs["selftest"] = sp
    return parser, subs


def _option_map(sp: argparse.ArgumentParser) -> dict[str, str]:
    """dest -> first long option string."""
    out = {}
    for action in sp._actions:
        longs = [s for s in action.option_strings if s.startswith("--")]
        if longs and action.dest not in ("help", "config"):
            out[action.dest] = longs[0]
    return out


def read_config(path: str | Path) -> list[tuple[str, str]]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    items = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        items.append((key.replace("-", "_"), value))
    return items


def resolve_options(command: str, cli_ns: argparse.Namespace, sp: argparse.ArgumentParser) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS[command])
    if "seed" in _option_map(sp):
        opts["seed"] = _env_seed()
    cli = vars(cli_ns)
    cfg_path = cli.get("config")
    if cfg_path:
        omap = _option_map(sp)
        aliases = {k.lower(): k for k in omap}
        aliases["lambda"] = "lam"
        argv = []
        for key, value in read_config(cfg_path):
            dest = aliases.get(key.lower()) if key not in omap else key
            if dest is None:
                raise UsageError(f"unknown config key {key!r}")
            argv += [omap[dest], value]
        opts.update(vars(sp.parse_args(argv)))
    opts.update({k: v for k, v in cli.items() if k != "command"})
    return opts


def _params(o: dict) -> ModelParams:
    return ModelParams(u=o["u"], c=o["c"], sigma=o["sigma"], delta=o["delta"], t_window=o["T"])


def _grid(o: dict, p: ModelParams) -> GridSpec:
    if o["horizon"] is not None:
        t_max = o["horizon"]
        if p.delta == 0:
            check_delta0_horizon(p, t_max)
    elif p.delta > 0:
        t_max, _ = horizon_for_tolerance(p, o["eps"])
    else:
        raise UsageError("delta = 0 has no finite saturation horizon; pass --horizon")
    if o["n_steps"] is not None:
        return GridSpec(t_max, o["n_steps"])
    if not o["step"] > 0:
        raise UsageError("--step must be > 0")
    return GridSpec.with_step(t_max, o["step"])


def _experiment(o: dict) -> ExperimentConfig:
    p = _params(o)
    monitor = o["monitor"]
    if monitor == "auto":
        monitor = "bridge" if p.t_window == 0 else "grid"
    return ExperimentConfig(
        params=p,
        grid=_grid(o, p),
        n_paths=o["n_paths"],
        seed=o["seed"],
        sampler=o["sampler"],
        conf_level=o["conf_level"],
        monitor=monitor,
        n_anchors=o["n_anchors"],
    )


def _reported(o: dict) -> dict:
    return {k: v for k, v in sorted(o.items()) if k not in _NOT_REPORTED}


def _estimate_dict(e: EstimateCI) -> dict:
    d = {"value": e.value, "std_err": e.std_err, "n_reps": e.n_reps, "conf_level": e.conf_level, "flag": e.flag}
    if "hits" in e.extra:
        d["hits"] = e.extra["hits"]
    if "ladder" in e.extra:
        d["ladder"] = e.extra["ladder"]
    return d


def _drift(o: dict) -> DriftSpec:
    p = _params(o)
    p.require_positive_delta("the infinite-horizon constant")
    return DriftSpec.from_params(p)


def _pickands(o: dict, a: float, b: float, curve: bool = False):
    monitor = o["const_monitor"]
    if monitor == "auto":
        monitor = "bridge" if a == 1.0 else "grid"
    q = PickandsQuery(a, b, o["lam"], n_grid_t=o["n_grid_t"], n_grid_s=o["n_grid_s"], n_reps=o["reps"], seed=o["seed"])
    return estimate_P_infty(q, o["tol"], o["lambda_max"], monitor=monitor, return_curve=curve)


def _f_constant(o: dict) -> EstimateCI:
    """``F(2 c^2 T / sigma^2)``; ``F(0) = 1`` is used exactly."""
    t_scaled = 2.0 * o["c"] ** 2 * o["T"] / o["sigma"] ** 2
    if t_scaled == 0:
        return EstimateCI(1.0, 0.0, 1, flag="exact")
    return estimate_F(t_scaled, o["f_lambda"], o["f_n_grid"], o["reps"], o["seed"], method=o["f_method"])


def _constant_for(o: dict) -> EstimateCI:
    if o["delta"] == 0:
        return _f_constant(o)
    d = _drift(o)
    return _pickands(o, d.a, d.b)


def _paths(o: dict) -> tuple[Path, Path]:
    prefix = Path(o["out"])
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True, exist_ok=True)
    return prefix.with_name(prefix.name + ".csv"), prefix.with_name(prefix.name + ".json")


def cmd_ruin_prob(o: dict) -> int:
    cfg = _experiment(o)
    p = cfg.params
    est = estimate_ruin_prob(cfg, o["workers"])
    lo, hi, clamped = est.interval(probability=True)
    exact = None
    if p.t_window == 0:
        exact = exact_classical_ruin(p) if p.delta > 0 else delta0_exact_classical(p)
    csv_path, json_path = _paths(o)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "mc", "stderr", "ci_lo", "ci_hi", "exact", "hits", "flag"])
        w.writerow([fmt(p.u), fmt(est.value), fmt(est.std_err), fmt(lo), fmt(hi), fmt(exact), est.extra["hits"], est.flag])
    doc = report_document(
        "ruin-prob",
        _reported(o),
        seed=cfg.seed,
        experiment=cfg.describe(),
        estimate={**_estimate_dict(est), "ci": [lo, hi], "ci_clamped": clamped},
        exact=exact,
    )
    write_report_json(doc, json_path)
    print(f"estimate = {fmt(est.value)} +/- {fmt(est.half_width)} ({est.conf_level:.0%} CI [{fmt(lo)}, {fmt(hi)}])")
    print(f"std_err = {fmt(est.std_err)}  hits = {est.extra['hits']}  flag={est.flag or 'ok'}")
    if exact is not None:
        print(f"exact = {fmt(exact)}")
    return EXIT_OK


def cmd_constant(o: dict) -> int:
    if o["a"] is None and o["b"] is None:
        if o["delta"] == 0:
            est = _f_constant(o)
            csv_path, json_path = _paths(o)
            with open(csv_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["T_scaled", "estimate", "std_err", "n_reps", "flag"])
                t_scaled = 2.0 * o["c"] ** 2 * o["T"] / o["sigma"] ** 2
                w.writerow([fmt(t_scaled), fmt(est.value), fmt(est.std_err), est.n_reps, est.flag])
            write_report_json(report_document("constant-F", _reported(o), seed=o["seed"], estimate=_estimate_dict(est)), json_path)
            print(f"F = {fmt(est.value)} +/- {fmt(est.half_width)}  flag={est.flag or 'ok'}")
            return EXIT_OK
        d = _drift(o)
        a, b = d.a, d.b
    elif o["a"] is None or o["b"] is None:
        raise UsageError("give both --a and --b, or neither (then c, sigma, delta, T set them)")
    else:
        a, b = o["a"], o["b"]
    est = _pickands(o, a, b)
    csv_path, json_path = _paths(o)
    write_ladder_csv(est, csv_path)
    doc = report_document("constant", _reported(o), seed=o["seed"], a=a, b=b, estimate=_estimate_dict(est))
    write_report_json(doc, json_path)
    for row in est.extra["ladder"]:
        print(f"lambda = {fmt(row['lambda'])}  estimate = {fmt(row['estimate'])}  std_err = {fmt(row['std_err'])}")
    print(f"P = {fmt(est.value)} +/- {fmt(est.half_width)}  flag={est.flag}")
    return EXIT_OK


def cmd_compare(o: dict) -> int:
    base = _experiment(o)
    const = _constant_for(o)
    rows = compare_report(o["u_values"], base, const, o["workers"])
    csv_path, json_path = _paths(o)
    write_report_csv(rows, csv_path)
    cfg = base.describe()
    cfg["params"].pop("u")
    extra = {}
    if o["delta"] == 0:
        extra["constant_closed_form"] = delta0_parisian_constant(2.0 * o["c"] ** 2 * o["T"] / o["sigma"] ** 2)
    doc = report_document(
        "compare", _reported(o), rows, seed=base.seed, experiment=cfg, constant=_estimate_dict(const), **extra
    )
    write_report_json(doc, json_path)
    print(f"constant = {fmt(const.value)} +/- {fmt(const.half_width)}  flag={const.flag or 'ok'}")
    print("u,mc,stderr,asymptotic,exact,ratio")
    for r in rows:
        print(",".join([fmt(r.u), fmt(r.mc_estimate.value), fmt(r.mc_estimate.std_err), fmt(r.asymptotic), fmt(r.exact), fmt(r.ratio_mc_over_asym)]))
    return EXIT_OK


def cmd_ruin_time(o: dict) -> int:
    p = _params(o)
    p.require_positive_delta("ruin-time statistics")
    xs = list(o["x_values"])
    if not xs:
        raise UsageError("--x-values is empty")
    for x in xs:
        local_horizon(p, x)
    cfg = _experiment(o)
    d = DriftSpec.from_params(p)
    p_inf, curve = _pickands(o, d.a, d.b, curve=True)
    res = estimate_ruin_time_cdf(cfg, xs, o["workers"])
    asym = [ruin_time_cdf_asymptotic(p, x, curve, p_inf).value for x in xs]

    def limit_cdf(v):
        return [ruin_time_cdf_asymptotic(p, float(x), curve, p_inf).value if x > -(p.c**2) / p.delta**2 else 0.0 for x in v]

    ks = {}
    if res.n_conditioned:
        ks = {w: kolmogorov_distance(res.law, limit_cdf, w) for w in ("first", "last")}
    csv_path, json_path = _paths(o)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "cdf_mc", "cdf_asym"])
        for x, mc, a in zip(xs, res.values, asym):
            w.writerow([fmt(x), fmt(mc), fmt(a)])
    doc = report_document(
        "ruin-time",
        _reported(o),
        seed=cfg.seed,
        experiment=cfg.describe(),
        n_conditioned=res.n_conditioned,
        effective_sample_size=res.law.ess,
        flag=res.flag,
        constant=_estimate_dict(p_inf),
        kolmogorov_first_passage=ks.get("first"),
        kolmogorov_last_exceedance=ks.get("last"),
        points=[{"x": x, "cdf_mc": float(m), "cdf_asym": a} for x, m, a in zip(xs, res.values, asym)],
    )
    write_report_json(doc, json_path)
    print(f"conditioned paths = {res.n_conditioned}  flag={res.flag or 'ok'}")
    print("x,cdf_mc,cdf_asym")
    for x, m, a in zip(xs, res.values, asym):
        print(f"{fmt(x)},{fmt(m)},{fmt(a)}")
    if ks:
        print(f"Kolmogorov distance: first passage {fmt(ks['first'])}, last exceedance {fmt(ks['last'])}")
    return EXIT_OK


def cmd_selftest(o: dict) -> int:
    from .selftest import run_all

    results = run_all()
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} ({r.checks} checks)")
        for msg in r.failures:
            print(f"    {msg}")
    ok = all(r.passed for r in results)
    print("all invariant suites passed" if ok else "invariant failure")
    return EXIT_OK if ok else EXIT_INVARIANT


COMMANDS = {
    "ruin-prob": cmd_ruin_prob,
    "constant": cmd_constant,
    "compare": cmd_compare,
    "ruin-time": cmd_ruin_time,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    parser, subs = build_parser()
    ns = parser.parse_args(argv)
    try:
        opts = resolve_options(ns.command, ns, subs[ns.command])
        if opts.get("workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return COMMANDS[ns.command](opts)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
