"""Gaussian process models, drift functions and finite domain grids.

Scalar building blocks are Brownian motion, fractional Brownian motion
(variance t**(2H)), the stationary Ornstein-Uhlenbeck process with unit
variance, and variance-scaled copies of these. They are combined into
R^n-valued models either as independent coordinates, mixed through an
invertible matrix S (X = S Y), or on a product domain T_1 x ... x T_n where
coordinate i only looks at t_i. A tabulated model carries Sigma_t directly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DegenerateCovariance, ModelError, NotPositiveDefinite, OutsideTable

INDEPENDENT = "independent-components"
MIXED = "mixed-by-matrix"
PRODUCT = "product-domain"
TABULATED = "tabulated"
MODEL_KINDS = (INDEPENDENT, MIXED, PRODUCT, TABULATED)

PROBE_TIMES = np.geomspace(1e-3, 1e3, 13)


# -- scalar kernels -------------------------------------------------------


@dataclass(frozen=True)
class BM:
    name = "bm"

    def variance(self, t):
        return np.asarray(t, dtype=float)

    def cov(self, s, t):
        return np.minimum(np.asarray(s, dtype=float), np.asarray(t, dtype=float))

    @property
    def index(self):
        return 1.0

    def to_dict(self):
        return {"type": "bm"}


@dataclass(frozen=True)
class FBM:
    hurst: float
    name = "fbm"

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ModelError(f"Hurst index must lie in (0, 1), got {self.hurst}")

    def variance(self, t):
        return np.abs(np.asarray(t, dtype=float)) ** (2 * self.hurst)

    def cov(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        h2 = 2 * self.hurst
        return 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(s - t) ** h2)

    @property
    def index(self):
        return 2 * self.hurst

    def to_dict(self):
        return {"type": "fbm", "hurst": self.hurst}


@dataclass(frozen=True)
class OU:
    """Stationary Ornstein-Uhlenbeck process, unit variance."""

    lam: float
    name = "ou"

    def __post_init__(self):
        if not self.lam > 0:
            raise ModelError(f"OU rate must be positive, got {self.lam}")

    def variance(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def cov(self, s, t):
        return np.exp(-self.lam * np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float)))

    @property
    def index(self):
        return 0.0

    def to_dict(self):
        return {"type": "ou", "lam": self.lam}


@dataclass(frozen=True)
class Scaled:
    """Covariance c * k_inner, i.e. the process sqrt(c) times ``inner``."""

    c: float
    inner: object
    name = "scaled"

    def __post_init__(self):
        if not self.c > 0:
            raise ModelError(f"scale must be positive, got {self.c}")

    def variance(self, t):
        return self.c * self.inner.variance(t)

    def cov(self, s, t):
        return self.c * self.inner.cov(s, t)

    @property
    def index(self):
        return self.inner.index

    def to_dict(self):
        return {"type": "scaled", "c": self.c, "inner": self.inner.to_dict()}


def kernel_from_dict(spec):
    kind = spec.get("type")
    if kind == "bm":
        return BM()
    if kind == "fbm":
        return FBM(float(spec["hurst"]))
    if kind == "ou":
        return OU(float(spec["lam"]))
    if kind == "scaled":
        return Scaled(float(spec["c"]), kernel_from_dict(spec["inner"]))
    raise ModelError(f"unknown component type {kind!r}")


def _point(t):
    return np.array(t, dtype=float, ndmin=1).ravel()


# -- domain grids ---------------------------------------------------------


@dataclass(frozen=True)
class DomainGrid:
    """Finite, ordered set of distinct points in R^m (stored as rows)."""

    points: np.ndarray
    description: str = "explicit"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ModelError("grid must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise ModelError("grid points must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ModelError("grid points must be distinct")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points):
        return cls(points, "explicit")

    @classmethod
    def axis(cls, lower, upper, resolution, spacing="linear"):
        return cls(_axis(lower, upper, resolution, spacing), f"{spacing} [{lower}, {upper}] x {resolution}")

    @classmethod
    def box(cls, lower, upper, resolution, spacing="linear"):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        res = np.broadcast_to(np.asarray(resolution, dtype=int), lower.shape)
        axes = [_axis(lo, hi, r, spacing) for lo, hi, r in zip(lower, upper, res)]
        grid = cls.product(axes)
        return cls(grid.points, f"{spacing} box {lower.tolist()}..{upper.tolist()} x {res.tolist()}")

    @classmethod
    def product(cls, axes):
        axes = [np.asarray(a, dtype=float).ravel() for a in axes]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        return cls(pts, "product of " + " x ".join(str(a.size) for a in axes) + " axes")

    def exclude_degenerate(self, model):
        """Drop points where the model's covariance is singular."""
        keep = []
        for t in self.points:
            try:
                model.sigma_at(t)
            except DegenerateCovariance:
                continue
            keep.append(t)
        if not keep:
            raise ModelError("every grid point has a degenerate covariance")
        if len(keep) == len(self):
            return self
        return DomainGrid(np.array(keep), self.description + f" ({len(self) - len(keep)} degenerate points dropped)")


def _axis(lower, upper, resolution, spacing):
    resolution = int(resolution)
    if resolution < 1:
        raise ModelError("resolution must be at least 1")
    if spacing == "linear":
        return np.linspace(lower, upper, resolution)
    if spacing == "log":
        if lower <= 0 or upper <= 0:
            raise ModelError("log spacing needs a positive range")
        return np.geomspace(lower, upper, resolution)
    raise ModelError(f"unknown spacing {spacing!r}")


# -- covariance models ----------------------------------------------------


@dataclass(frozen=True)
class CovModel:
    """R^n-valued centered Gaussian process model.

    ``mixing`` is S for mixed-by-matrix models. Tabulated models store one
    covariance matrix per point in ``table_points`` / ``table_sigmas`` and
    support cross-covariances only at coinciding points.
    """

    n: int
    kind: str
    components: tuple = ()
    mixing: np.ndarray = None
    table_points: np.ndarray = None
    table_sigmas: np.ndarray = None
    domain_dim: int = 1
    caveats: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.kind == TABULATED:
            pts = np.array(self.table_points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            sig = np.array(self.table_sigmas, dtype=float)
            if sig.shape != (pts.shape[0], self.n, self.n):
                raise ModelError(f"expected {pts.shape[0]} matrices of shape {(self.n, self.n)}")
            object.__setattr__(self, "table_points", pts)
            object.__setattr__(self, "table_sigmas", sig)
            object.__setattr__(self, "domain_dim", pts.shape[1])
            for t, s in zip(pts, sig):
                try:
                    linalg.cholesky(s)
                except (NotPositiveDefinite, ValueError):
                    raise DegenerateCovariance(t) from None
            return
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.n:
            raise ModelError(f"expected {self.n} components, got {len(self.components)}")
        if self.kind == MIXED:
            S = np.array(self.mixing, dtype=float)
            if S.shape != (self.n, self.n):
                raise ModelError(f"mixing matrix must be {self.n}x{self.n}")
            if np.linalg.cond(S) > 1e12:
                raise ModelError("mixing matrix is not invertible")
            object.__setattr__(self, "mixing", S)
        object.__setattr__(self, "domain_dim", self.n if self.kind == PRODUCT else 1)
        for t in PROBE_TIMES:
            self.sigma_at(np.full(self.domain_dim, t))

    def _variances(self, t):
        if self.kind == PRODUCT:
            return np.array([k.variance(ti) for k, ti in zip(self.components, t)], dtype=float)
        return np.array([k.variance(t[0]) for k in self.components], dtype=float)

    def _check_point(self, t):
        t = _point(t)
        if t.shape[0] != self.domain_dim:
            raise ModelError(f"point {t.tolist()} has dimension {t.shape[0]}, expected {self.domain_dim}")
        return t

    def _lookup(self, t):
        hit = np.flatnonzero(np.all(np.abs(self.table_points - t) <= 1e-12 * (1 + np.abs(t)), axis=1))
        if hit.size == 0:
            raise OutsideTable(f"t={t.tolist()} is not tabulated")
        return self.table_sigmas[hit[0]].copy()

    def sigma_at(self, t):
        """Covariance matrix of X(t); raises DegenerateCovariance if singular."""
        t = self._check_point(t)
        if self.kind == TABULATED:
            return self._lookup(t)
        var = self._variances(t)
        if not np.all(var > 0):
            raise DegenerateCovariance(t)
        if self.kind == MIXED:
            S = self.mixing
            sigma = (S * var) @ S.T
            sigma = 0.5 * (sigma + sigma.T)
            try:
                linalg.cholesky(sigma)
            except NotPositiveDefinite:
                raise DegenerateCovariance(t) from None
            return sigma
        return np.diag(var)

    def cross_cov(self, s, t):
        """Cov(X(s), X(t)) as an n x n matrix."""
        s = self._check_point(s)
        t = self._check_point(t)
        if self.kind == TABULATED:
            if np.array_equal(s, t):
                return self._lookup(t)
            raise OutsideTable("tabulated models carry no cross-covariances between distinct points")
        if self.kind == PRODUCT:
            return np.diag([float(k.cov(si, ti)) for k, si, ti in zip(self.components, s, t)])
        k = np.array([float(c.cov(s[0], t[0])) for c in self.components])
        if self.kind == MIXED:
            return (self.mixing * k) @ self.mixing.T
        return np.diag(k)

    def component_cov_blocks(self, points):
        """Per-component covariance matrices over ``points``: shape (n, N, N)."""
        pts = np.array(points, dtype=float)
        if self.kind == TABULATED:
            raise OutsideTable("tabulated models carry no cross-covariances between distinct points")
        out = []
        for i, k in enumerate(self.components):
            col = pts[:, i] if self.kind == PRODUCT else pts[:, 0]
            out.append(k.cov(col[:, None], col[None, :]))
        return np.array(out)

    def to_dict(self):
        if self.kind == TABULATED:
            return {
                "n": self.n,
                "kind": self.kind,
                "points": self.table_points.tolist(),
                "sigmas": self.table_sigmas.tolist(),
            }
        out = {"n": self.n, "kind": self.kind, "components": [k.to_dict() for k in self.components]}
        if self.kind == MIXED:
            out["S"] = self.mixing.tolist()
        return out


def independent(components):
    return CovModel(len(components), INDEPENDENT, tuple(components))


def mixed(components, S):
    return CovModel(len(components), MIXED, tuple(components), mixing=S)


def tabulated(points, sigmas):
    sigmas = np.asarray(sigmas, dtype=float)
    return CovModel(
        sigmas.shape[1],
        TABULATED,
        table_points=points,
        table_sigmas=sigmas,
        caveats=("short-time regularity is not checked for tabulated models",),
    )


# -- drift ----------------------------------------------------------------

DRIFT_KINDS = ("zero", "linear-unit", "affine", "tabulated")


@dataclass(frozen=True)
class DriftModel:
    """Drift d(t) in R^n.

    With ``per_axis`` (product domains) coordinate i is evaluated at t_i;
    otherwise t is a scalar time. ``ell`` caches the coordinatewise infima
    over a working grid once ``bind`` has been called.
    """

    n: int
    kind: str = "zero"
    slope: np.ndarray = None
    intercept: np.ndarray = None
    table_points: np.ndarray = None
    table_values: np.ndarray = None
    per_axis: bool = False
    ell: np.ndarray = None

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ModelError(f"unknown drift kind {self.kind!r}")
        if self.kind == "affine":
            slope = np.broadcast_to(np.asarray(self.slope, dtype=float), (self.n,)).copy()
            intercept = np.zeros(self.n) if self.intercept is None else np.asarray(self.intercept, dtype=float)
            intercept = np.broadcast_to(intercept, (self.n,)).copy()
            object.__setattr__(self, "slope", slope)
            object.__setattr__(self, "intercept", intercept)
        if self.kind == "tabulated":
            pts = np.array(self.table_points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            vals = np.array(self.table_values, dtype=float).reshape(pts.shape[0], self.n)
            if not np.all(np.isfinite(vals)):
                raise ModelError("tabulated drift must be finite")
            object.__setattr__(self, "table_points", pts)
            object.__setattr__(self, "table_values", vals)

    def _time(self, t):
        if self.per_axis:
            if t.shape[0] != self.n:
                raise ModelError(f"per-axis drift needs a point of dimension {self.n}")
            return t
        return np.full(self.n, t[0])

    def drift_at(self, t):
        t = _point(t)
        if self.kind == "zero":
            return np.zeros(self.n)
        if self.kind == "linear-unit":
            return self._time(t).copy()
        if self.kind == "affine":
            return self.slope * self._time(t) + self.intercept
        hit = np.flatnonzero(np.all(np.abs(self.table_points - t) <= 1e-12 * (1 + np.abs(t)), axis=1))
        if hit.size == 0:
            raise OutsideTable(f"drift is not tabulated at t={t.tolist()}")
        return self.table_values[hit[0]].copy()

    def infima(self, grid):
        """ell_i = min over the grid of d_i(t)."""
        return np.min([self.drift_at(t) for t in grid.points], axis=0)

    def bind(self, grid):
        return DriftModel(
            self.n, self.kind, self.slope, self.intercept, self.table_points,
            self.table_values, self.per_axis, self.infima(grid),
        )

    def to_dict(self):
        out = {"kind": self.kind, "params": {}}
        if self.kind == "affine":
            out["params"] = {"slope": self.slope.tolist(), "intercept": self.intercept.tolist()}
        elif self.kind == "tabulated":
            out["params"] = {"points": self.table_points.tolist(), "values": self.table_values.tolist()}
        return out


def threshold_u0(drift, q, grid):
    """u0 = -min_i(ell_i / q_i); for u > u0 every u q_i + d_i(t) is positive."""
    q = np.asarray(q, dtype=float)
    if not np.all(q > 0):
        raise ModelError("thresholds q must be positive")
    ell = drift.ell if drift.ell is not None else drift.infima(grid)
    return float(-np.min(ell / q))


def product_model(coords):
    """Combine scalar (CovModel, DriftModel) pairs into a product-domain model.

    Coordinate i of the result is evaluated at t_i only, so the covariance is
    diagonal and the drift is per-axis.
    """
    kernels, slopes, intercepts, kinds = [], [], [], set()
    for cov, drift in coords:
        if cov.n != 1 or cov.kind not in (INDEPENDENT, MIXED):
            raise ModelError("product_model needs scalar coordinate models")
        k = cov.components[0]
        if cov.kind == MIXED:
            k = Scaled(float(cov.mixing[0, 0]) ** 2, k)
        kernels.append(k)
        if drift.kind == "tabulated":
            raise ModelError("tabulated drifts are not supported in product_model")
        kinds.add(drift.kind)
        if drift.kind == "zero":
            slopes.append(0.0)
            intercepts.append(0.0)
        elif drift.kind == "linear-unit":
            slopes.append(1.0)
            intercepts.append(0.0)
        else:
            slopes.append(float(drift.slope[0]))
            intercepts.append(float(drift.intercept[0]))
    n = len(kernels)
    cov = CovModel(n, PRODUCT, tuple(kernels))
    if kinds <= {"zero"}:
        drift = DriftModel(n, "zero", per_axis=True)
    elif kinds <= {"linear-unit"}:
        drift = DriftModel(n, "linear-unit", per_axis=True)
    else:
        drift = DriftModel(n, "affine", slope=slopes, intercept=intercepts, per_axis=True)
    return cov, drift
