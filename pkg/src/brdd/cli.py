"""Command-line interface: ``estimate``, ``simulate`` and ``selftest``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 estimation
error (an estimator produced nothing).
"""

from __future__ import annotations

import argparse
import logging
import platform
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, _backend
from . import boundary as bd
from . import classic
from .config import ESTIMATORS, KINDS, RunConfig, ZajoncOptions
from .data import AssignmentRule, Dataset, validate_and_normalize
from .dgp import DgpConfig, TauProfile, generate
from .errors import ConfigError, DataError, EstimationError, RDError
from .io import dump_json, estimate_record, load_csv, write_csv, write_curves

log = logging.getLogger("brdd")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATION = 0, 1, 2, 3


@dataclass
class RunResult:
    """In-memory results of :func:`run`, mirroring what is written to disk."""

    dataset: Dataset
    records: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    @property
    def status(self) -> int:
        return EXIT_ESTIMATION if self.failures else EXIT_OK


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dgp is not None:
        return validate_and_normalize(generate(cfg.dgp), cfg.dgp.rule)
    return load_csv(cfg.input, cfg.columns, cfg.rule)


def _mean_h(curve) -> float:
    return float(np.mean([e.h for e in curve.estimates]))


def run(cfg: RunConfig, write: bool = True) -> RunResult:
    """Run every selected estimator and write the artifacts.

    Artifacts in ``cfg.output_dir``: ``estimates.json`` (one record per
    estimate), ``curves_<method>_<kind>.csv`` (long format) and
    ``manifest.json`` (config echo, diagnostics, versions).  An estimator
    that raises is recorded under ``failures`` and the others still run.
    """
    ds = load_dataset(cfg)
    res = RunResult(dataset=ds)
    common = dict(kernel=cfg.kernel, bandwidth=cfg.bandwidth, pilot_ratio=cfg.pilot_ratio)

    def attempt(label, fn):
        try:
            return fn()
        except EstimationError as exc:
            log.warning("%s failed: %s", label, exc)
            res.failures[label] = f"{type(exc).__name__}: {exc}"
            return None

    for kind in cfg.kinds:
        if "centering" in cfg.estimators:
            e = attempt(f"centering/{kind}", lambda: classic.centering_rd(ds, kind, **common))
            if e:
                res.records.append(estimate_record(e, "centering"))
        for along in ("x1", "x2"):
            if f"conditional-{along}" in cfg.estimators:
                e = attempt(f"conditional-{along}/{kind}", lambda: classic.conditional_rd(ds, along, kind, **common))
                if e:
                    res.records.append(estimate_record(e, f"conditional-{along}"))
        if "multicutoff" in cfg.estimators:
            if ds.group is None:
                res.failures[f"multicutoff/{kind}"] = "dataset has no group column"
            else:
                mc = attempt(f"multicutoff/{kind}",
                             lambda: classic.multicutoff_rd(ds, cfg.effective_rule(), kind, **common))
                if mc:
                    for g, e in sorted(mc.per_group.items()):
                        res.records.append(estimate_record(e, "multicutoff", group=g))
                    res.records.append(estimate_record(mc.pooled, "multicutoff-pooled"))
                    if mc.weighted is not None:
                        res.records.append({"method": "multicutoff-weighted", "kind": kind,
                                            **mc.weighted.to_dict(), "skipped_groups": mc.skipped})
        need_flex = "flexible" in cfg.estimators or ("papay" in cfg.estimators and cfg.papay_bandwidths is None)
        if need_flex:
            for b in ("B1", "B2"):
                c = attempt(f"flexible/{kind}/{b}", lambda: bd.flexible_boundary_curve(
                    ds, b, cfg.fraction, kind, cfg.kernel, cfg.increment_pct, cfg.bandwidth, cfg.pilot_ratio))
                if c is not None:
                    if not c.estimates:
                        res.failures[f"flexible/{kind}/{b}"] = "every grid point failed"
                    res.curves[("flexible", kind, b)] = c
        if "papay" in cfg.estimators:
            hs = cfg.papay_bandwidths
            if hs is None:
                c1, c2 = res.curves.get(("flexible", kind, "B1")), res.curves.get(("flexible", kind, "B2"))
                if c1 and c2 and c1.estimates and c2.estimates:
                    hs = (_mean_h(c1), _mean_h(c2))
                else:
                    res.failures[f"papay/{kind}"] = "no flexible bandwidths to default to"
            if hs is not None:
                for b in ("B1", "B2"):
                    c = attempt(f"papay/{kind}/{b}", lambda: bd.papay_curve(
                        ds, b, hs[0], hs[1], kind, cfg.kernel, cfg.increment_pct))
                    if c is not None:
                        res.curves[("papay", kind, b)] = c
        if "zajonc" in cfg.estimators:
            zo = cfg.zajonc
            if zo.H is not None and zo.rule == "manual":
                zc = bd.ZajoncConfig.manual(*zo.H)
            else:
                zc = attempt(f"zajonc-bandwidth/{kind}", lambda: bd.zajonc_bandwidth(
                    ds, zo.rule, zo.grid_spacing, cfg.fraction, cfg.kernel))
            if zc is not None:
                for b in ("B1", "B2"):
                    c = attempt(f"zajonc/{kind}/{b}", lambda: bd.zajonc_curve(
                        ds, b, zc, kind, cfg.kernel, cfg.increment_pct, zo.trim, zo.trim_factor, zo.trim_top_pct))
                    if c is not None:
                        if not c.estimates:
                            res.failures[f"zajonc/{kind}/{b}"] = "every grid point failed"
                        res.curves[("zajonc", kind, b)] = c

    if "flexible" not in cfg.estimators:
        res.curves = {k: v for k, v in res.curves.items() if k[0] != "flexible"}
    for (method, kind, b), c in sorted(res.curves.items()):
        res.records.append({"method": f"{method}-curve", "kind": kind, "boundary_id": b, "points": len(c),
                            "skipped": len(c.skipped), "mean_tau_bc": c.mean(), "meta": _meta(c.meta)})
    res.records.sort(key=_record_key)
    if write:
        _write(cfg, res)
    return res


def _meta(meta):
    return {k: v for k, v in meta.items() if k != "coefficients"}


def _record_key(r):
    return (r["method"], r.get("kind", ""), r.get("boundary_id", ""), r.get("group", ""))


def _write(cfg: RunConfig, res: RunResult):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    res.paths["estimates"] = dump_json(res.records, out / "estimates.json")
    groups = {}
    for (method, kind, b), c in res.curves.items():
        groups.setdefault((method, kind), []).append(c)
    for (method, kind), cs in sorted(groups.items()):
        res.paths[f"curves_{method}_{kind}"] = write_curves(cs, out / f"curves_{method}_{kind}.csv")
    manifest = {
        "config": cfg.to_dict(),
        "diagnostics": res.dataset.diagnostics,
        "failures": res.failures,
        "artifacts": sorted(p.name for p in res.paths.values()),
        "seed": cfg.dgp.seed if cfg.dgp is not None else cfg.seed,
        "versions": {"brdd": __version__, "numpy": np.__version__, "python": platform.python_version(),
                     "backend": _backend.name()},
        "notes": {"multicutoff_weights": "proportional to in-bandwidth counts n_left + n_right",
                  "ci": "centered on tau_bias_corrected, half-width 1.96 * se_robust",
                  "papay_se": "conventional contrast standard errors",
                  "zajonc_se": "conventional HC1 standard errors"},
    }
    res.paths["manifest"] = dump_json(manifest, out / "manifest.json")


# ---------------------------------------------------------------------------
# self test


def selftest(verbose: bool = True) -> bool:
    """Fast end-to-end checks on noiseless and small synthetic data."""
    from .engine import BandwidthPair, sharp_discontinuity

    checks = []
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 2000)
    y = 0.5 + 0.3 * (x >= 0) + 0.7 * x
    e = sharp_discontinuity(x, y, 0.0, BandwidthPair.manual(0.5))
    checks.append(("noiseless univariate jump", abs(e.tau_conventional - 0.3) < 1e-10
                   and abs(e.tau_bias_corrected - 0.3) < 1e-10))

    x1, x2 = rng.uniform(-20, 20, 20000), rng.uniform(-20, 20, 20000)
    z = (x1 >= 0) & (x2 >= 0)
    ds = validate_and_normalize(Dataset(y=0.4 + 0.01 * x1 + 0.3 * z, x1=x1, x2=x2))
    zj = bd.zajonc_point(ds, (0.0, 5.0), (6.0, 6.0))
    pf = bd.papay_effect(bd.papay_fit(ds, 10.0, 10.0), "B1", 5.0)[0]
    flex = bd.flexible_boundary_curve(ds, "B1", 0.2, increment_pct=10, bandwidth=5.0)
    checks.append(("noiseless planar boundary", abs(zj.tau_conventional - 0.3) < 1e-8 and abs(pf - 0.3) < 1e-8
                   and np.allclose(flex.tau, 0.3, atol=1e-8)))

    cfg = DgpConfig(n=20000, compliance=1.0, noise_sd=0.05, seed=1)
    ds = validate_and_normalize(generate(cfg), cfg.rule)
    c = classic.conditional_rd(ds, "x1")
    checks.append(("synthetic recovery", abs(c.tau_bias_corrected - 0.3) < 0.05))

    names = _backend.available()
    if len(names) > 1:
        from . import _kernels_py
        k = _backend.kernels()
        X = np.ascontiguousarray(rng.normal(size=500))
        Y = np.ascontiguousarray(rng.normal(size=(500, 2)))
        a = k.rbc_moments(X, Y, 0.0, 0.5, 0.75, 1, 0)
        b = _kernels_py.rbc_moments(X, Y, 0.0, 0.5, 0.75, 1, 0)
        checks.append(("backend agreement", all(np.allclose(p, q, rtol=1e-10, atol=1e-12) for p, q in zip(a, b))))

    ok = True
    for name, passed in checks:
        ok &= bool(passed)
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}")
    if verbose:
        print(f"backend: {_backend.name()}")
    return ok


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brdd", description="Regression discontinuity with two running variables.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="run estimators from a YAML config")
    e.add_argument("config", help="YAML run configuration")
    e.add_argument("--input", help="CSV input (replaces the config's input/dgp)")
    e.add_argument("--output-dir")
    e.add_argument("--estimators", help=f"comma-separated subset of {','.join(ESTIMATORS)}")
    e.add_argument("--kind", choices=KINDS)
    e.add_argument("--fraction", type=float)
    e.add_argument("--kernel", choices=("triangular", "uniform", "epanechnikov"))
    e.add_argument("--bandwidth", type=float, help="manual h for every univariate estimate")
    e.add_argument("--zajonc-rule", choices=("min", "mean"))
    e.add_argument("--seed", type=int, help="override the DGP seed")

    s = sub.add_parser("simulate", help="write a synthetic dataset as CSV")
    s.add_argument("output", help="CSV path to write")
    s.add_argument("--config", help="YAML DGP recipe (keys of DgpConfig)")
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--tau", type=float, help="constant effect")
    s.add_argument("--compliance", type=float)
    s.add_argument("--noise-sd", type=float)

    sub.add_parser("selftest", help="quick end-to-end checks")
    return p


def _estimate(args) -> int:
    cfg = RunConfig.from_yaml(args.config)
    over = {}
    if args.input:
        over.update(input=args.input, dgp=None)
    if args.output_dir:
        over["output_dir"] = args.output_dir
    if args.estimators:
        over["estimators"] = tuple(s.strip() for s in args.estimators.split(",") if s.strip())
    for name in ("kind", "fraction", "kernel", "bandwidth", "seed"):
        if getattr(args, name) is not None:
            over[name] = getattr(args, name)
    if args.zajonc_rule:
        over["zajonc"] = replace(cfg.zajonc, rule=args.zajonc_rule)
    if over:
        cfg = replace(cfg, **over)
    res = run(cfg)
    for label, reason in sorted(res.failures.items()):
        print(f"failed: {label}: {reason}", file=sys.stderr)
    print(f"wrote {len(res.paths)} artifacts to {cfg.output_dir}")
    return res.status


def _simulate(args) -> int:
    import yaml

    cfg = DgpConfig()
    if args.config:
        try:
            cfg = DgpConfig.from_dict(yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {})
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
    over = {}
    if args.n is not None:
        over["n"] = args.n
    if args.seed is not None:
        over["seed"] = args.seed
    if args.tau is not None:
        over["tau"] = TauProfile("constant", args.tau)
    if args.compliance is not None:
        over["compliance"] = args.compliance
    if args.noise_sd is not None:
        over["noise_sd"] = args.noise_sd
    cfg = cfg.with_(**over) if over else cfg
    write_csv(generate(cfg), args.output)
    print(f"wrote {cfg.n} rows to {args.output}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "estimate":
            return _estimate(args)
        if args.command == "simulate":
            return _simulate(args)
        return EXIT_OK if selftest() else EXIT_ESTIMATION
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except RDError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
