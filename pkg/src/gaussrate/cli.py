"""Command-line interface.

Exit codes: 0 ok, 1 assumption check failed, 2 bad input, 3 numerical failure.
"""

import argparse
import copy
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import assumptions, decay, models, montecarlo, quadrant
from .config import ESTIMATOR_NAMES, load_config, parse_config
from .errors import (
    BelowThreshold,
    ConfigError,
    DimensionCap,
    DimensionTooLarge,
    GaussRateError,
    ModelError,
    NoConvergence,
    NotPositiveDefinite,
    OutsideTable,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BAD_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


def _clean(obj):
    """Make ``obj`` strict-JSON serializable (non-finite floats become null)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False)


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class Output:
    def __init__(self, args):
        self.out = args.out
        self.format = args.format
        if self.out:
            os.makedirs(self.out, exist_ok=True)

    def write(self, name, text):
        if self.out:
            with open(os.path.join(self.out, name), "w") as fh:
                fh.write(text)

    def emit(self, command, summary, table=None):
        """Write <command>.json (+ <command>.csv) and echo one format to stdout."""
        js = _dump(summary) + "\n"
        self.write(f"{command}.json", js)
        if "config" in summary:
            self.write("config.json", _dump(summary["config"]) + "\n")
        if table is not None:
            self.write(f"{command}.csv", table)
        sys.stdout.write(table if (self.format == "csv" and table is not None) else js)


def _effective_config(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    raw = copy.deepcopy(raw)
    for key in ("seed", "samples", "estimator"):
        value = getattr(args, key, None)
        if value is not None:
            raw.setdefault("mc", {})[key] = value
    if getattr(args, "u", None) is not None:
        raw["u"] = args.u
    if getattr(args, "delta", None) is not None:
        raw.setdefault("solver", {})["delta"] = args.delta
    return raw


def _load(args):
    if not args.config:
        raise ConfigError("--config", "a config file is required")
    try:
        raw = _effective_config(args)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return parse_config(raw)


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ConfigError(name, "required for this command")


def _require_u(cfg):
    if cfg.u is None:
        raise ConfigError("u", "required for this command")
    u0 = models.threshold_u0(cfg.drift, cfg.q, cfg.grid)
    if not cfg.u > u0:
        raise BelowThreshold(cfg.u, u0)


def cmd_rate(args):
    cfg = _load(args)
    _require(cfg, "model", "grid", "q")
    _require_u(cfg)
    res = decay.rate_over_domain(cfg.model, cfg.drift, cfg.q, cfg.u, cfg.grid, refine=cfg.refine)
    summary = res.to_dict()
    summary["M_u_t_at_argmin"] = 2.0 * res.m_of_u_T
    summary["config"] = cfg.raw
    m = cfg.grid.dim
    cols = [f"t{i}" for i in range(m)] + ["M_u_t"]
    table = _csv(cols, [list(t) + [v] for t, v in zip(res.points, res.per_point)])
    Output(args).emit("rate", summary, table)
    return EXIT_OK


def cmd_check(args):
    cfg = _load(args)
    _require(cfg, "model", "grid")
    report = assumptions.check_a1(cfg.model, cfg.grid, cfg.delta)
    summary = {"a1": report.to_dict(), "config": cfg.raw}
    if cfg.q is not None:
        u0 = models.threshold_u0(cfg.drift, cfg.q, cfg.grid)
        summary["threshold"] = {"u0": u0}
        if cfg.u is not None:
            summary["threshold"].update(u=cfg.u, ok=bool(cfg.u > u0))
    if cfg.drift.kind != "zero":
        try:
            summary["a2_heuristic"] = assumptions.a2_tail_heuristic(cfg.model, cfg.drift, cfg.grid)
        except GaussRateError:
            pass
    summary["pass"] = report.passed
    Output(args).emit("check", summary)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _read_matrix(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("--matrix", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            data = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2).tolist()
        except ValueError:
            raise ConfigError("--matrix", "expected a JSON or CSV matrix") from None
    q = None
    if isinstance(data, dict):
        q = data.get("q")
        data = data.get("A", data.get("matrix"))
    try:
        a = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("--matrix", "matrix entries must be numbers") from None
    return a, q


def cmd_saddle(args):
    a, q_file = _read_matrix(args.matrix)
    q = args.q if args.q is not None else q_file
    if q is None:
        raise ConfigError("--q", "threshold vector required (flag or 'q' in the matrix file)")
    q = np.array(q, dtype=float, ndmin=1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != q.size:
        raise ConfigError("--matrix", f"expected a {q.size}x{q.size} matrix")
    if not np.all(q > 0):
        raise ConfigError("--q", "thresholds must be positive")
    try:
        report = quadrant.verify_saddle(a, q, args.trials, args.seed)
    except ValueError as exc:
        if isinstance(exc, GaussRateError):
            raise
        raise ConfigError("--matrix", str(exc)) from None
    summary = report.to_dict()
    summary["A"] = a.tolist()
    summary["q"] = q.tolist()
    Output(args).emit("saddle", summary)
    return EXIT_OK


def _sweep_grid(cfg):
    if cfg.truncate is not None:
        t = cfg.truncate

        def grid(u):
            return montecarlo.truncated_grid(
                cfg.model, cfg.drift, cfg.q, u, t.get("t_min", 0.1), t.get("points", 400), t.get("factor", 5.0)
            )

        return grid
    if cfg.grid is None:
        raise ConfigError("grid", "required unless mc.truncate is given")
    return cfg.grid


def cmd_simulate(args):
    cfg = _load(args)
    _require(cfg, "model", "q")
    if cfg.u is None:
        raise ConfigError("u", "required for this command")
    grid = _sweep_grid(cfg)
    grid = grid(cfg.u) if callable(grid) else grid
    u0 = models.threshold_u0(cfg.drift, cfg.q, grid)
    if not cfg.u > u0:
        raise BelowThreshold(cfg.u, u0)
    rate = decay.rate_over_domain(cfg.model, cfg.drift, cfg.q, cfg.u, grid, keep_table=False)
    est = montecarlo.ESTIMATORS[cfg.estimator]
    kwargs = {"rate": rate} if est is montecarlo.estimate_is else {}
    e = est(cfg.model, cfg.drift, cfg.q, cfg.u, grid, cfg.samples, cfg.seed, cap=cfg.cap, **kwargs)
    nlp = -math.log(e.p_hat) if e.p_hat > 0 else None
    summary = {
        "estimate": e.to_dict(),
        "u": cfg.u,
        "m_of_u_T": rate.m_of_u_T,
        "neg_log_p": nlp,
        "ratio": None if nlp is None else nlp / rate.m_of_u_T,
        "seed": cfg.seed,
        "truncation": [float(grid.points.min()), float(grid.points.max())],
        "config": cfg.raw,
    }
    table = _csv(montecarlo.SWEEP_COLUMNS, [[cfg.u, e.p_hat, nlp, rate.m_of_u_T, summary["ratio"], e.half_width, e.samples]])
    Output(args).emit("simulate", summary, table)
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    _require(cfg, "model", "q")
    grid = _sweep_grid(cfg)
    for u in cfg.u_list:
        g = grid(u) if callable(grid) else grid
        u0 = models.threshold_u0(cfg.drift, cfg.q, g)
        if not u > u0:
            raise BelowThreshold(u, u0)
    rows = montecarlo.sweep(
        cfg.model, cfg.drift, cfg.q, cfg.u_list, grid, cfg.samples, cfg.seed, cfg.estimator, cap=cfg.cap
    )
    summary = {
        "rows": [r.to_dict() for r in rows],
        "seed": cfg.seed,
        "samples": cfg.samples,
        "estimator": cfg.estimator,
        "config": cfg.raw,
    }
    table = _csv(montecarlo.SWEEP_COLUMNS, [[getattr(r, c) for c in montecarlo.SWEEP_COLUMNS] for r in rows])
    Output(args).emit("sweep", summary, table)
    return EXIT_OK


def _regvar_inputs(cfg):
    rv = dict(cfg.regvar or {})
    q = rv.get("q", None if cfg.q is None else cfg.q.tolist())
    if q is None:
        raise ConfigError("regvar.q", "threshold vector required")
    sigma1 = None
    if "alpha" in rv:
        spec_kw = dict(alpha=rv["alpha"], q=q, kappa=rv.get("kappa", 1), c=rv.get("c", [1.0]), S=rv.get("S"))
        if "sigma1" in rv:
            try:
                sigma1 = models.kernel_from_dict(rv["sigma1"]).variance
            except (KeyError, GaussRateError) as exc:
                raise ConfigError("regvar.sigma1", str(exc)) from None
        else:
            a1 = float(np.atleast_1d(rv["alpha"])[0])
            sigma1 = models.FBM(a1 / 2.0).variance
    elif cfg.model is not None and cfg.model.kind in (models.INDEPENDENT, models.MIXED):
        spec_kw, sigma1 = _derive_regvar(cfg.model, q)
    else:
        raise ConfigError("regvar.alpha", "give regvar.alpha or an independent/mixed model")
    try:
        spec = decay.RegVarSpec(**spec_kw)
    except ModelError as exc:
        raise ConfigError("regvar", str(exc)) from None
    bracket = rv.get("bracket", [1e-3, 1e3])
    resolution = int(rv.get("resolution", 200))
    u_list = rv.get("u_list", cfg.u_list)
    return spec, sigma1, bracket, resolution, [float(u) for u in u_list]


def _derive_regvar(model, q):
    """RegVarSpec inputs from a model whose components are power-law variances."""
    kernels = model.components
    alpha = [k.index for k in kernels]
    if any(not 0 < a < 2 for a in alpha):
        raise ConfigError("components", "every component needs a variance index in (0, 2)")
    if any(b < a for a, b in zip(alpha, alpha[1:])):
        raise ConfigError("components", "components must be ordered by ascending variance index")
    kappa = sum(1 for a in alpha if a == alpha[0])
    big = 1e8
    s1 = float(kernels[0].variance(big))
    c = [s1 / float(k.variance(big)) for k in kernels[:kappa]]
    c[0] = 1.0
    S = model.mixing if model.kind == models.MIXED else None
    return dict(alpha=alpha, q=q, kappa=kappa, c=c, S=S), kernels[0].variance


def cmd_regvar(args):
    cfg = _load(args)
    spec, sigma1, bracket, resolution, u_list = _regvar_inputs(cfg)
    res = decay.regvar_J(spec, bracket, resolution)
    summary = res.to_dict()
    summary["alpha"] = spec.alpha.tolist()
    summary["C"] = spec.C.tolist()
    summary["S"] = spec.S.tolist()
    summary["q"] = spec.q.tolist()
    summary["asymptotic"] = [{"u": u, "decay": decay.regvar_asymptotic(u, sigma1, res.J)} for u in u_list]
    summary["config"] = cfg.raw
    Output(args).emit("regvar", summary)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gaussrate",
        description="Decay rates of multivariate Gaussian exceedance probabilities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mc=False):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="directory for JSON/CSV outputs")
        p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")
        if mc:
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--samples", type=int, default=None)
            p.add_argument("--estimator", choices=ESTIMATOR_NAMES, default=None)
        return p

    p = common(sub.add_parser("rate", help="domain decay rate M(u; T)"))
    p.add_argument("--u", type=float, default=None)
    p.set_defaults(func=cmd_rate)

    p = common(sub.add_parser("check", help="grid check of the correlation assumption"))
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("saddle", help="verify the weighted-sum duality for a matrix")
    p.add_argument("--matrix", required=True, help="JSON or CSV covariance matrix")
    p.add_argument("--q", type=lambda s: [float(x) for x in s.split(",")], default=None)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_saddle)

    p = common(sub.add_parser("simulate", help="Monte Carlo estimate at one level u"), mc=True)
    p.add_argument("--u", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("sweep", help="Monte Carlo ratio sweep over u_list"), mc=True)
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("regvar", help="regularly varying constant J and asymptotics"))
    p.set_defaults(func=cmd_regvar)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BelowThreshold, ModelError, OutsideTable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (NotPositiveDefinite, NoConvergence, DimensionCap, DimensionTooLarge, GaussRateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
