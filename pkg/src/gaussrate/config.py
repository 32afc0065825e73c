"""Run configuration files (JSON).

Top-level fields::

    n, kind, components[], S?            process model
    points?, sigmas?                     tabulated models
    drift   {kind, params}
    grid    {box | axis | points | product, resolution?, spacing?}
    q, u?, u_list?
    solver  {delta, refine}
    mc      {samples, seed, estimator, cap, truncate?}
    regvar  {alpha, kappa?, c?, S?, q?, bracket?, resolution?, sigma1?, u_list?}

See ``docs/config.md`` for the full description.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import ConfigError, GaussRateError

ESTIMATOR_NAMES = ("crude", "mean-shift", "is")


@dataclass
class RunConfig:
    raw: dict
    model: object = None
    drift: object = None
    grid: object = None
    q: np.ndarray = None
    u: float = None
    u_list: list = field(default_factory=list)
    delta: float = 1e-3
    refine: bool = False
    samples: int = 10_000
    seed: int = 0
    estimator: str = "crude"
    cap: int = 4000
    truncate: dict = None
    regvar: dict = None


def _vector(raw, name, n=None):
    try:
        v = np.array(raw, dtype=float, ndmin=1)
    except (TypeError, ValueError):
        raise ConfigError(name, "expected a list of numbers") from None
    if v.ndim != 1 or (n is not None and v.size != n):
        raise ConfigError(name, f"expected a list of {n} numbers")
    if not np.all(np.isfinite(v)):
        raise ConfigError(name, "entries must be finite")
    return v


def _kernel(spec, name):
    if not isinstance(spec, dict):
        raise ConfigError(name, "component must be an object with a 'type'")
    try:
        return models.kernel_from_dict(spec)
    except KeyError as exc:
        raise ConfigError(name, f"missing parameter {exc}") from None
    except GaussRateError as exc:
        raise ConfigError(name, str(exc)) from None


def build_model(raw):
    kind = raw.get("kind")
    if kind not in models.MODEL_KINDS:
        raise ConfigError("kind", f"must be one of {list(models.MODEL_KINDS)}")
    try:
        if kind == models.TABULATED:
            if "points" not in raw or "sigmas" not in raw:
                raise ConfigError("points", "tabulated models need 'points' and 'sigmas'")
            return models.tabulated(raw["points"], raw["sigmas"])
        comps = raw.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError("components", "expected a non-empty list")
        kernels = [_kernel(c, f"components[{i}]") for i, c in enumerate(comps)]
        n = raw.get("n", len(kernels))
        if n != len(kernels):
            raise ConfigError("n", f"n={n} but {len(kernels)} components given")
        if kind == models.MIXED:
            if "S" not in raw:
                raise ConfigError("S", "mixed-by-matrix models need S")
            return models.mixed(kernels, raw["S"])
        if kind == models.PRODUCT:
            return models.CovModel(n, models.PRODUCT, tuple(kernels))
        return models.independent(kernels)
    except ConfigError:
        raise
    except GaussRateError as exc:
        field_name = "S" if kind == models.MIXED and "mixing" in str(exc) else "kind"
        raise ConfigError(field_name, str(exc)) from None


def build_drift(raw, model):
    n = model.n
    per_axis = model.kind == models.PRODUCT
    if raw is None:
        return models.DriftModel(n, "zero", per_axis=per_axis)
    kind = raw.get("kind", "zero")
    params = raw.get("params", {})
    if kind not in models.DRIFT_KINDS:
        raise ConfigError("drift.kind", f"must be one of {list(models.DRIFT_KINDS)}")
    if kind == "affine":
        slope = _vector(params.get("slope", [0.0] * n), "drift.params.slope")
        intercept = _vector(params.get("intercept", [0.0] * n), "drift.params.intercept")
        if slope.size not in (1, n) or intercept.size not in (1, n):
            raise ConfigError("drift.params", f"slope/intercept need 1 or {n} entries")
        return models.DriftModel(n, "affine", slope=slope, intercept=intercept, per_axis=per_axis)
    if kind == "tabulated":
        try:
            return models.DriftModel(
                n, "tabulated", table_points=params["points"], table_values=params["values"], per_axis=per_axis
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError("drift.params", f"tabulated drift needs points and values ({exc})") from None
    return models.DriftModel(n, kind, per_axis=per_axis)


def build_grid(raw, model=None):
    if not isinstance(raw, dict):
        raise ConfigError("grid", "expected an object")
    spacing = raw.get("spacing", "linear")
    try:
        if "points" in raw:
            grid = models.DomainGrid.from_points(raw["points"])
        elif "box" in raw or "axis" in raw:
            box = np.array(raw.get("box", raw.get("axis")), dtype=float, ndmin=2)
            if box.shape[1] != 2:
                raise ConfigError("grid.box", "expected a list of [lower, upper] pairs")
            if "resolution" not in raw:
                raise ConfigError("grid.resolution", "required for box grids")
            grid = models.DomainGrid.box(box[:, 0], box[:, 1], raw["resolution"], spacing)
        elif "product" in raw:
            axes = []
            for i, ax in enumerate(raw["product"]):
                if isinstance(ax, dict):
                    axes.append(
                        models.DomainGrid.axis(ax["lower"], ax["upper"], ax["resolution"], ax.get("spacing", "linear")).points[:, 0]
                    )
                else:
                    axes.append(_vector(ax, f"grid.product[{i}]"))
            grid = models.DomainGrid.product(axes)
        else:
            raise ConfigError("grid", "needs one of 'box', 'axis', 'points' or 'product'")
    except ConfigError:
        raise
    except (GaussRateError, ValueError, KeyError) as exc:
        raise ConfigError("grid", str(exc)) from None
    if model is not None:
        if grid.dim != model.domain_dim:
            raise ConfigError("grid", f"points have dimension {grid.dim}, model expects {model.domain_dim}")
        try:
            grid = grid.exclude_degenerate(model)
        except GaussRateError as exc:
            raise ConfigError("grid", str(exc)) from None
    return grid


def parse_config(raw):
    """Validate a decoded config dict and build the model objects."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    cfg = RunConfig(raw=raw)
    if "kind" in raw:
        cfg.model = build_model(raw)
        cfg.drift = build_drift(raw.get("drift"), cfg.model)
        if "grid" in raw:
            cfg.grid = build_grid(raw["grid"], cfg.model)
            try:
                cfg.drift = cfg.drift.bind(cfg.grid)
            except GaussRateError as exc:
                raise ConfigError("drift", str(exc)) from None
        if "q" in raw:
            cfg.q = _vector(raw["q"], "q", cfg.model.n)
            if not np.all(cfg.q > 0):
                raise ConfigError("q", "thresholds must be positive")
    if "u" in raw:
        cfg.u = float(raw["u"])
    if "u_list" in raw:
        cfg.u_list = [float(x) for x in _vector(raw["u_list"], "u_list")] if raw["u_list"] else []
    solver = raw.get("solver", {})
    cfg.delta = float(solver.get("delta", cfg.delta))
    if not 0 < cfg.delta < 1:
        raise ConfigError("solver.delta", "must lie in (0, 1)")
    cfg.refine = bool(solver.get("refine", False))
    mc = raw.get("mc", {})
    cfg.samples = int(mc.get("samples", cfg.samples))
    if cfg.samples < 1:
        raise ConfigError("mc.samples", "must be at least 1")
    cfg.seed = int(mc.get("seed", cfg.seed))
    cfg.estimator = mc.get("estimator", cfg.estimator)
    if cfg.estimator not in ESTIMATOR_NAMES:
        raise ConfigError("mc.estimator", f"must be one of {list(ESTIMATOR_NAMES)}")
    cfg.cap = int(mc.get("cap", cfg.cap))
    cfg.truncate = mc.get("truncate")
    cfg.regvar = raw.get("regvar")
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return parse_config(raw)
