"""Logarithmic decay rates of the multivariate exceedance probability.

For a point t and level u the per-point rate is

    M(u, t) = inf_{v >= u q} <v + d(t), inv(Sigma_t) (v + d(t))>

and the domain rate is M(u; T) = 1/2 inf_t M(u, t), so that
log P(exists t: X(t) - d(t) > u q) ~ -M(u; T). Domains are finite grids.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import BelowThreshold, InvalidCorrelation, ModelError
from .models import PRODUCT, DriftModel, threshold_u0
from .quadrant import QuadrantProblem, solve_quadrant, solve_quadrant_psd

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-10, max_iter=200):
    """Minimize a unimodal f on [a, b]; returns (x, f(x))."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _thresholds(q, n):
    q = np.array(q, dtype=float, ndmin=1)
    if q.shape != (n,):
        raise ModelError(f"q must have length {n}")
    if not np.all(q > 0):
        raise ModelError("thresholds q must be positive")
    return q


def solve_point(model, drift, q, u, t):
    """QpSolution of the per-point problem (no threshold guard)."""
    H = linalg.inverse_spd(model.sigma_at(t))
    return solve_quadrant(QuadrantProblem(H, u * np.asarray(q, dtype=float), drift.drift_at(t)))


def rate_at_point(model, drift, q, u, t):
    """Un-halved per-point rate M(u, t)."""
    q = _thresholds(q, model.n)
    u0 = float(-np.min(drift.drift_at(t) / q))
    if not u > u0:
        raise BelowThreshold(u, u0)
    return solve_point(model, drift, q, u, t).value


@dataclass(frozen=True)
class RateResult:
    m_of_u_T: float
    argmin_t: tuple
    qp: object
    u: float
    q: np.ndarray
    u0: float
    points: np.ndarray = None
    per_point: np.ndarray = None
    notes: tuple = field(default=())

    def to_dict(self):
        return {
            "u": self.u,
            "q": self.q.tolist(),
            "u0": self.u0,
            "m_of_u_T": self.m_of_u_T,
            "per_point_min_M_u_t": 2.0 * self.m_of_u_T,
            "argmin": list(self.argmin_t),
            "weights": self.qp.w_star.tolist(),
            "v_star": self.qp.v_star.tolist(),
            "active": list(self.qp.active),
            "kkt_residual": self.qp.kkt_residual,
            "grid_size": None if self.points is None else int(self.points.shape[0]),
            "notes": list(self.notes),
        }


def _lexicographic_argmin(points, values):
    best = np.min(values)
    ties = np.flatnonzero(values == best)
    if ties.size == 1:
        return int(ties[0])
    sub = points[ties]
    order = np.lexsort(sub.T[::-1])
    return int(ties[order[0]])


def rate_over_domain(model, drift, q, u, grid, refine=False, keep_table=True):
    """M(u; T) over a finite grid, with the argmin point and its QP solution.

    Ties between grid points go to the lexicographically smallest point.
    With ``refine`` the incumbent is polished by golden-section search along
    each axis between its neighbouring grid coordinates; the reported argmin
    may then lie off the grid.
    """
    q = _thresholds(q, model.n)
    u0 = threshold_u0(drift, q, grid)
    if not u > u0:
        raise BelowThreshold(u, u0)
    pts = grid.points
    values = np.array([solve_point(model, drift, q, u, t).value for t in pts])
    k = _lexicographic_argmin(pts, values)
    best_t, best_value = pts[k].copy(), float(values[k])
    notes = []
    if refine:
        best_t, best_value, moved = _refine(model, drift, q, u, pts, best_t, best_value)
        if moved:
            notes.append("argmin refined off-grid by golden-section search")
    qp = solve_point(model, drift, q, u, best_t)
    return RateResult(
        m_of_u_T=0.5 * best_value,
        argmin_t=tuple(float(x) for x in best_t),
        qp=qp,
        u=float(u),
        q=q,
        u0=u0,
        points=pts if keep_table else None,
        per_point=values if keep_table else None,
        notes=tuple(notes),
    )


def _refine(model, drift, q, u, pts, t0, f0):
    t, best, moved = t0.copy(), f0, False
    for axis in range(pts.shape[1]):
        coords = np.unique(pts[:, axis])
        i = int(np.searchsorted(coords, t[axis]))
        lo = coords[max(i - 1, 0)]
        hi = coords[min(i + 1, coords.size - 1)]
        if hi <= lo:
            continue

        def f(s, axis=axis):
            trial = t.copy()
            trial[axis] = s
            try:
                return solve_point(model, drift, q, u, trial).value
            except (np.linalg.LinAlgError, ModelError):
                return np.inf

        s, fs = golden_section(f, lo, hi, tol=1e-12)
        if fs < best:
            t[axis], best, moved = s, fs, True
    return t, best, moved


def bounded_rate_I(model, q, grid):
    """I(T) = inf_t inf_{v >= q} <v, inv(Sigma_t) v> (drift-free, u = 1)."""
    zero = DriftModel(model.n, "zero", per_axis=model.kind == PRODUCT)
    return 2.0 * rate_over_domain(model, zero, q, 1.0, grid, keep_table=False).m_of_u_T


def bounded_asymptotic(u, I):
    """Decay u**2 / 2 * I for bounded sample paths and drift."""
    return 0.5 * u * u * I


def two_dim_closed_form(sigma1, sigma2, r, q1, q2):
    """Per-point rate factor for two coordinates with correlation r.

    Equals inf_{v >= q} <v, inv(Sigma) v> for Sigma = [[s1^2, r s1 s2],
    [r s1 s2, s2^2]]. At r = -1 the rate is infinite.
    """
    if not -1.0 <= r <= 1.0:
        raise InvalidCorrelation(f"correlation {r} outside [-1, 1]")
    if sigma1 <= 0 or sigma2 <= 0 or q1 <= 0 or q2 <= 0:
        raise ValueError("standard deviations and thresholds must be positive")
    a1, a2 = sigma1 / q1, sigma2 / q2
    base = 1.0 / min(a1, a2) ** 2
    c = min(a2 / a1, a1 / a2)
    if r < c:
        denom = 1.0 - r * r
        if denom == 0.0:
            return math.inf
        return base * (1.0 + (c - r) ** 2 / denom)
    return base


# -- regularly varying variances ------------------------------------------


@dataclass(frozen=True)
class RegVarSpec:
    """Scaling limit data: indices alpha (ascending), C = diag(c, 0...), S, q."""

    alpha: tuple
    q: tuple
    kappa: int = 1
    c: tuple = (1.0,)
    S: np.ndarray = None

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float, ndmin=1)
        n = alpha.size
        if not (np.all(alpha > 0) and np.all(alpha < 2)):
            raise ModelError("indices alpha must lie in (0, 2)")
        if np.any(np.diff(alpha) < 0):
            raise ModelError("indices alpha must be sorted ascending")
        if not 1 <= self.kappa <= n:
            raise ModelError(f"kappa must lie in 1..{n}")
        c = np.array(self.c, dtype=float, ndmin=1)
        if c.size != self.kappa or not np.all(c > 0) or c[0] != 1.0:
            raise ModelError("c must have kappa positive entries with c[0] == 1")
        S = np.eye(n) if self.S is None else np.array(self.S, dtype=float)
        if S.shape != (n, n) or np.linalg.cond(S) > 1e12:
            raise ModelError("S must be an invertible n x n matrix")
        q = _thresholds(self.q, n)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "q", q)

    @property
    def n(self):
        return self.alpha.size

    @property
    def C(self):
        diag = np.zeros(self.n)
        diag[: self.kappa] = self.c
        return np.diag(diag)

    @property
    def H(self):
        S_inv = np.linalg.inv(self.S)
        H = S_inv.T @ self.C @ S_inv
        return 0.5 * (H + H.T)


@dataclass(frozen=True)
class RegVarResult:
    J: float
    t_star: float
    qp: object
    attained: bool
    bracket: tuple
    notes: tuple = field(default=())

    def to_dict(self):
        return {
            "J": self.J,
            "t_star": self.t_star,
            "attained": self.attained,
            "bracket": list(self.bracket),
            "v_star": self.qp.v_star.tolist(),
            "active": list(self.qp.active),
            "notes": list(self.notes),
        }


def regvar_J(spec, bracket=(1e-3, 1e3), resolution=200, tol=1e-12):
    """J = inf_t inf_{v >= q} <S^-1 (v + t 1), C S^-1 (v + t 1)> / t**alpha_1.

    Log-spaced scan of the bracket, then golden-section search in log t
    around the best scan point. If the scan minimum sits on the bracket edge
    the bracket is widened by 100x on both sides once; if it stays there the
    result is flagged as not attained.
    """
    H, q, a1, n = spec.H, spec.q, float(spec.alpha[0]), spec.n

    def f(s):
        t = math.exp(s)
        return solve_quadrant_psd(QuadrantProblem(H, q, np.full(n, t))).value / t**a1

    lo, hi = (float(x) for x in bracket)
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    notes = []
    for attempt in range(2):
        s = np.linspace(math.log(lo), math.log(hi), int(resolution))
        vals = np.array([f(x) for x in s])
        k = int(np.argmin(vals))
        on_edge = k in (0, s.size - 1)
        if not on_edge or attempt == 1:
            break
        notes.append(f"minimum on bracket edge of [{lo:g}, {hi:g}]; widened")
        lo, hi = lo / 100.0, hi * 100.0
    attained = not on_edge
    if attained:
        s_best, J = golden_section(f, s[k - 1], s[k + 1], tol=tol)
        if vals[k] < J:
            s_best, J = s[k], vals[k]
    else:
        s_best, J = s[k], float(vals[k])
        notes.append("outer minimizer runs to the bracket edge; infimum not attained in range")
    t_star = math.exp(s_best)
    qp = solve_quadrant_psd(QuadrantProblem(H, q, np.full(n, t_star)))
    return RegVarResult(float(J), t_star, qp, attained, (lo, hi), tuple(notes))


def regvar_asymptotic(u, sigma1_sq, J):
    """u**2 J / (2 sigma_1^2(u)); ``sigma1_sq`` is a callable or a number."""
    s2 = sigma1_sq(u) if callable(sigma1_sq) else sigma1_sq
    s2 = float(s2)
    if not (u > 0 and s2 > 0):
        raise ValueError("need u > 0 and sigma_1^2(u) > 0")
    return u * u * J / (2.0 * s2)
