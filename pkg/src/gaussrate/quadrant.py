"""Quadratic programs over a translated quadrant.

The central problem is

    minimize  <v + d, H (v + d)>   subject to  v >= b   (componentwise)

with H symmetric positive (semi)definite. At the optimum the dual weights
w* = H (v* + d) are nonnegative and vanish off the active set, and for d = 0
the optimal value equals the weighted-sum ratio

    sup_{w >= 0, w != 0}  <w, b>**2 / <w, inv(H) w>,

attained at w*. ``verify_saddle`` checks that equality numerically.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import linalg
from .errors import DimensionTooLarge, NoConvergence, NotPositiveDefinite, ZeroWeight

ACTIVE_TOL = 1e-10
JITTERS = (1e-6, 1e-7, 1e-8)
BRUTE_FORCE_MAX_DIM = 20


@dataclass(frozen=True)
class QuadrantProblem:
    """inf over v >= b of <v + d, H (v + d)>."""

    H: np.ndarray
    b: np.ndarray
    d: np.ndarray = None

    def __post_init__(self):
        H = linalg.as_symmetric(self.H)
        b = np.array(self.b, dtype=float, ndmin=1)
        d = np.zeros_like(b) if self.d is None else np.array(self.d, dtype=float, ndmin=1)
        if b.shape != (H.shape[0],) or d.shape != b.shape:
            raise ValueError(
                f"dimension mismatch: H is {H.shape}, b has {b.shape}, d has {d.shape}"
            )
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(d))):
            raise ValueError("b and d must be finite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)

    @property
    def dim(self):
        return self.b.shape[0]

    def objective(self, v):
        x = np.asarray(v, dtype=float) + self.d
        return float(x @ self.H @ x)


@dataclass(frozen=True)
class QpSolution:
    v_star: np.ndarray
    value: float
    active: tuple
    w_star: np.ndarray
    kkt_residual: float
    method: str = "active-set"
    iterations: int = 0
    attained: bool = True
    notes: tuple = field(default=())

    def to_dict(self):
        return {
            "v_star": self.v_star.tolist(),
            "value": self.value,
            "active": list(self.active),
            "w_star": self.w_star.tolist(),
            "kkt_residual": self.kkt_residual,
            "method": self.method,
            "iterations": self.iterations,
            "attained": self.attained,
            "notes": list(self.notes),
        }


def _finish(p, v, method, iterations=0, attained=True, notes=()):
    v = np.array(v, dtype=float)
    x = v + p.d
    w = p.H @ x
    value = max(float(x @ p.H @ x), 0.0)
    gap = v - p.b
    active = tuple(int(i) for i in np.flatnonzero(np.abs(gap) <= ACTIVE_TOL))
    free = np.ones(p.dim, dtype=bool)
    free[list(active)] = False
    residual = max(
        float(np.max(np.abs(w[free]), initial=0.0)),
        float(np.max(-w[~free], initial=0.0)),
        float(np.max(-gap, initial=0.0)),
        float(np.max(np.abs(w * gap), initial=0.0)),
    )
    return QpSolution(
        v_star=v,
        value=value,
        active=active,
        w_star=w,
        kkt_residual=residual,
        method=method,
        iterations=iterations,
        attained=attained,
        notes=tuple(notes),
    )


def _bound_constrained_qp(G, g, lower, max_iter=None):
    """Primal active-set method for min 1/2 x'Gx + g'x subject to x >= lower.

    G must be positive definite. Starts at the vertex x = lower with every bound
    in the working set, releases the bound with the most negative multiplier,
    and adds a blocking bound whenever a Newton step on the free face would
    leave the feasible region. Returns (x, working_set, iterations).
    """
    n = lower.shape[0]
    max_iter = max_iter or max(100, 20 * n)
    x = lower.copy()
    working = np.ones(n, dtype=bool)
    for it in range(1, max_iter + 1):
        free = ~working
        y = x.copy()
        y[working] = lower[working]
        if free.any():
            rhs = -(g[free] + G[np.ix_(free, working)] @ lower[working])
            y[free] = linalg.solve_spd(G[np.ix_(free, free)], rhs)
        slack = 1e-14 * (1.0 + np.abs(lower))
        blocking = np.flatnonzero(free & (y < lower - slack))
        if blocking.size:
            ratios = (x[blocking] - lower[blocking]) / (x[blocking] - y[blocking])
            k = int(np.argmin(ratios))
            alpha = min(max(float(ratios[k]), 0.0), 1.0)
            x = x + alpha * (y - x)
            j = blocking[k]
            x[j] = lower[j]
            working[j] = True
            continue
        x = np.maximum(y, lower)
        if not working.any():
            return x, working, it
        grad = G @ x + g
        scale = 1.0 + float(np.max(np.abs(G))) * float(np.max(np.abs(x))) * n + float(
            np.max(np.abs(g))
        )
        multipliers = np.where(working, grad, np.inf)
        j = int(np.argmin(multipliers))
        if multipliers[j] >= -1e-13 * scale:
            return x, working, it
        working[j] = False
    raise NoConvergence(f"active-set iteration cap {max_iter} reached (dim={n})")


def solve_quadrant(p, max_iter=None):
    """Exact minimizer of the quadrant problem for positive-definite H."""
    linalg.cholesky(p.H)
    G = 2.0 * p.H
    g = 2.0 * (p.H @ p.d)
    v, _, iterations = _bound_constrained_qp(G, g, p.b, max_iter)
    return _finish(p, v, "active-set", iterations)


def solve_quadrant_psd(p, jitters=JITTERS):
    """Quadrant problem for positive-semidefinite H.

    Positive-definite input is solved exactly. Otherwise the Tikhonov term
    eps * s * |v|**2 (s = max(1, max|H|)) is added for each eps in ``jitters``;
    the regularized minimizers approach the minimum-norm minimizer, and the
    reported value is the unregularized objective at the last of them.
    """
    try:
        linalg.cholesky(p.H)
    except NotPositiveDefinite:
        pass
    else:
        return solve_quadrant(p)

    n = p.dim
    s = max(1.0, float(np.max(np.abs(p.H))))
    g = 2.0 * (p.H @ p.d)
    values, norms, iterations = [], [], 0
    v = working = None
    for eps in jitters:
        G = 2.0 * (p.H + eps * s * np.eye(n))
        v, working, it = _bound_constrained_qp(G, g, p.b)
        iterations += it
        values.append(p.objective(v))
        norms.append(float(np.linalg.norm(v)))
    notes = [f"tikhonov jitters {list(jitters)} (scale {s:g})"]
    exact = _solve_face(p, working, s)
    if exact is not None:
        notes.append("polished on the final working set")
        return _finish(p, exact, "tikhonov", iterations, notes=notes)
    if len(values) > 1 and abs(values[-1] - values[-2]) >= 1e-6 * (1.0 + abs(values[-1])):
        raise NoConvergence(
            f"regularized values did not settle: {values[-2]:.12g} vs {values[-1]:.12g}"
        )
    attained = not (norms[-1] > 10.0 * norms[0] and norms[-1] > 1e3 * (1.0 + np.linalg.norm(p.b)))
    if not attained:
        notes.append("minimizer norm grows along the jitter sequence; infimum may not be attained")
    return _finish(p, v, "tikhonov", iterations, attained=attained, notes=notes)


def _solve_face(p, working, scale):
    """Minimum-norm stationary point on the face v_W = b_W, or None if it fails KKT."""
    free = ~working
    v = p.b.copy()
    if free.any():
        x_fixed = p.b[working] + p.d[working]
        rhs = -(p.H[np.ix_(free, working)] @ x_fixed)
        x_free, *_ = np.linalg.lstsq(p.H[np.ix_(free, free)], rhs, rcond=None)
        v[free] = x_free - p.d[free]
    tol = 1e-9 * scale * (1.0 + float(np.max(np.abs(v + p.d))))
    w = p.H @ (v + p.d)
    if np.any(v < p.b - 1e-12 * (1.0 + np.abs(p.b))):
        return None
    if np.any(np.abs(w[free]) > tol) or np.any(w[working] < -tol):
        return None
    return v


def brute_force_active_sets(p):
    """Enumerate all 2**n active sets; reference oracle for small problems.

    For each subset S, fix v_S = b_S, solve the stationarity equations on the
    complement, keep the feasible candidates, and return the cheapest.
    """
    n = p.dim
    if n > BRUTE_FORCE_MAX_DIM:
        raise DimensionTooLarge(f"dim={n} exceeds {BRUTE_FORCE_MAX_DIM} for enumeration")
    linalg.cholesky(p.H)
    H, b, d = p.H, p.b, p.d
    idx = np.arange(n)
    best_v, best_value = None, np.inf
    for k in range(n + 1):
        for fixed in combinations(range(n), k):
            fixed = list(fixed)
            free = np.setdiff1d(idx, fixed)
            v = b.copy()
            if free.size:
                rhs = -(H[np.ix_(free, fixed)] @ (b[fixed] + d[fixed])) - H[np.ix_(free, free)] @ d[free]
                v[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
                if np.any(v[free] < b[free] - 1e-12 * (1.0 + np.abs(b[free]))):
                    continue
            value = p.objective(v)
            if value < best_value:
                best_v, best_value = v, value
    return _finish(p, np.maximum(best_v, b), "enumeration", 2**n)


def dual_ratio(a, q, w):
    """<w, q>**2 / <w, a w> for a nonnegative, nonzero weight vector w."""
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(w > 0):
        raise ZeroWeight("weight vector is zero")
    a = linalg.as_symmetric(a)
    return float(w @ q) ** 2 / float(w @ a @ w)


@dataclass(frozen=True)
class SaddleReport:
    primal: float
    ratio_at_w_star: float
    max_sampled_ratio: float
    trials: int
    seed: int
    v_star: np.ndarray
    w_star: np.ndarray
    active: tuple
    strong_duality: bool
    weak_duality: bool

    @property
    def holds(self):
        return self.strong_duality and self.weak_duality

    def to_dict(self):
        return {
            "primal": self.primal,
            "ratio_at_w_star": self.ratio_at_w_star,
            "max_sampled_ratio": self.max_sampled_ratio,
            "trials": self.trials,
            "seed": self.seed,
            "v_star": self.v_star.tolist(),
            "w_star": self.w_star.tolist(),
            "active": list(self.active),
            "strong_duality": self.strong_duality,
            "weak_duality": self.weak_duality,
            "holds": self.holds,
        }


def random_weights(rng, n, size, anchor=None):
    """Nonnegative nonzero weight vectors: sparse exponentials, plus
    clipped perturbations of ``anchor`` when given."""
    out = rng.exponential(size=(size, n))
    keep = rng.random((size, n)) < rng.uniform(0.2, 1.0, size=(size, 1))
    out *= keep
    if anchor is not None:
        half = size // 2
        noise = rng.normal(scale=0.1 * (1.0 + np.abs(anchor)), size=(half, n))
        out[:half] = np.maximum(anchor + noise, 0.0)
    empty = ~np.any(out > 0, axis=1)
    out[empty, rng.integers(n, size=int(empty.sum()))] = 1.0
    return out


def verify_saddle(a, q, trials=100, seed=0):
    """Check the weighted-sum duality for covariance-like matrix ``a``.

    The primal is inf_{v >= q} <v, inv(a) v>; the dual objective is
    ``dual_ratio(a, q, w)``. Reports the primal value, the ratio at
    w* = inv(a) v*, and the largest ratio over ``trials`` random weights.
    """
    a = linalg.as_symmetric(a)
    q = np.array(q, dtype=float, ndmin=1)
    sol = solve_quadrant(QuadrantProblem(linalg.inverse_spd(a), q))
    at_star = dual_ratio(a, q, np.maximum(sol.w_star, 0.0))
    rng = np.random.default_rng(seed)
    sampled = [dual_ratio(a, q, w) for w in random_weights(rng, q.size, trials, sol.w_star)]
    max_sampled = max(sampled) if sampled else -np.inf
    return SaddleReport(
        primal=sol.value,
        ratio_at_w_star=at_star,
        max_sampled_ratio=float(max_sampled),
        trials=int(trials),
        seed=int(seed),
        v_star=sol.v_star,
        w_star=sol.w_star,
        active=sol.active,
        strong_duality=abs(at_star - sol.value) <= 1e-9 * max(1.0, abs(sol.value)),
        weak_duality=max_sampled <= sol.value + 1e-9,
    )
