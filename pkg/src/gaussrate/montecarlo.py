"""Monte Carlo estimation of the grid-level exceedance probability

    P(u) = P(exists t in grid: X_i(t) - d_i(t) > u q_i for all i)

by exact joint Gaussian sampling (Cholesky of the stacked covariance), either
crude or with a mean shift towards the most likely exceedance point.

Samples are drawn in fixed-size blocks, each with its own child seed spawned
from the master seed, so the result does not depend on how blocks are
scheduled across workers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .decay import rate_over_domain
from .errors import BelowThreshold, DimensionCap, NotPositiveDefinite, OutsideTable
from .models import DomainGrid, threshold_u0

Z95 = 1.959963984540054
DEFAULT_CAP = 4000
WORKERS_ENV = "GAUSSRATE_WORKERS"
BLOCK_ELEMENTS = 4_000_000


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class JointCovariance:
    """Covariance of the stacked vector (X(t_1), ..., X(t_N)), point-major."""

    matrix: np.ndarray
    factor: np.ndarray
    n: int
    jitter: float

    @property
    def dim(self):
        return self.matrix.shape[0]


def build_joint_covariance(model, grid, cap=DEFAULT_CAP, max_jitter_steps=5):
    """Assemble and factor the n|grid| x n|grid| joint covariance.

    If the factorization fails, a diagonal jitter starting at
    1e-10 * trace / dim is added and grown tenfold per retry.
    """
    n, N = model.n, len(grid)
    dim = n * N
    if dim > cap:
        raise DimensionCap(f"joint covariance dimension {dim} exceeds cap {cap}")
    try:
        blocks = model.component_cov_blocks(grid.points)
    except OutsideTable:
        if N != 1:
            raise
        gamma = model.sigma_at(grid.points[0])
    else:
        if model.mixing is not None:
            S = model.mixing
            gamma = np.einsum("ic,jc,cab->aibj", S, S, blocks).reshape(dim, dim)
        else:
            gamma = np.zeros((N, n, N, n))
            for i in range(n):
                gamma[:, i, :, i] = blocks[i]
            gamma = gamma.reshape(dim, dim)
    gamma = 0.5 * (gamma + gamma.T)
    jitter = 0.0
    base = 1e-10 * float(np.trace(gamma)) / dim
    for step in range(max_jitter_steps + 1):
        try:
            L = linalg.cholesky(gamma + jitter * np.eye(dim) if jitter else gamma)
        except NotPositiveDefinite:
            jitter = base * 10.0**step
            continue
        if jitter:
            gamma = gamma + jitter * np.eye(dim)
        return JointCovariance(gamma, L, n, jitter)
    raise NotPositiveDefinite(f"joint covariance not positive definite after jitter {jitter:.3e}")


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    half_width: float
    samples: int
    kind: str
    seed: int
    sum_w: float
    sum_w2: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def relative_half_width(self):
        return self.half_width / self.p_hat if self.p_hat > 0 else math.inf

    def to_dict(self):
        return {
            "p_hat": self.p_hat,
            "half_width": self.half_width,
            "samples": self.samples,
            "kind": self.kind,
            "seed": self.seed,
            "sum_w": self.sum_w,
            "sum_w2": self.sum_w2,
            "diagnostics": self.diagnostics,
        }


def _estimate_from_sums(kind, samples, sum_w, sum_w2, seed, diagnostics):
    p = sum_w / samples
    if kind == "crude":
        hw = Z95 * math.sqrt(max(p * (1.0 - p), 0.0) / samples)
        # keep p +/- hw inside [0, 1]
        hw = min(hw, p, 1.0 - p)
    else:
        var = max(sum_w2 / samples - p * p, 0.0)
        if samples > 1:
            var *= samples / (samples - 1)
        hw = Z95 * math.sqrt(var / samples)
    return McEstimate(p, hw, int(samples), kind, int(seed), float(sum_w), float(sum_w2), diagnostics)


def merge_estimates(estimates):
    """Pool estimates from disjoint seeds by their sufficient statistics."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("nothing to merge")
    kinds = {e.kind for e in estimates}
    if len(kinds) != 1:
        raise ValueError("cannot merge estimates of different kinds")
    samples = sum(e.samples for e in estimates)
    sum_w = math.fsum(e.sum_w for e in estimates)
    sum_w2 = math.fsum(e.sum_w2 for e in estimates)
    diag = {"merged_seeds": [e.seed for e in estimates]}
    return _estimate_from_sums(kinds.pop(), samples, sum_w, sum_w2, estimates[0].seed, diag)


def _block_sizes(samples, dim):
    size = max(1, min(samples, BLOCK_ELEMENTS // max(dim, 1)))
    full, rest = divmod(samples, size)
    return [size] * full + ([rest] if rest else [])


def _simulate(joint, levels, samples, seed, shift=None, theta=None, star=None, workers=None):
    """Run all blocks; returns (sum of weights, sum of squared weights).

    ``levels`` is u q + d(t) stacked like the joint vector. For the
    mean-shifted sampler, paths are L z + shift and each hit carries the
    likelihood ratio exp(-<y(t*), theta> + <theta, Gamma_** theta> / 2).
    """
    dim = joint.dim
    N = dim // joint.n
    sizes = _block_sizes(samples, dim)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    LT = joint.factor.T
    lv = levels.reshape(N, joint.n)
    if theta is not None:
        sl = slice(star * joint.n, (star + 1) * joint.n)
        half_quad = 0.5 * float(theta @ joint.matrix[sl, sl] @ theta)

    def block(args):
        size, child = args
        rng = np.random.Generator(np.random.PCG64(child))
        y = rng.standard_normal((size, dim)) @ LT
        if shift is not None:
            y += shift
        hit = np.any(np.all(y.reshape(size, N, joint.n) > lv, axis=2), axis=1)
        if theta is None:
            k = float(np.count_nonzero(hit))
            return k, k
        logw = -(y[hit][:, sl] @ theta) + half_quad
        w = np.exp(logw)
        return math.fsum(w), math.fsum(w * w)

    workers = workers or default_workers()
    jobs = list(zip(sizes, children))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, jobs))
    else:
        parts = [block(j) for j in jobs]
    return math.fsum(p[0] for p in parts), math.fsum(p[1] for p in parts)


def _levels(drift, q, u, grid):
    return np.concatenate([u * np.asarray(q, dtype=float) + drift.drift_at(t) for t in grid.points])


def _guard(drift, q, u, grid, samples):
    if samples < 1:
        raise ValueError("samples must be at least 1")
    u0 = threshold_u0(drift, q, grid)
    if not u > u0:
        raise BelowThreshold(u, u0)


def estimate_crude(model, drift, q, u, grid, samples, seed, cap=DEFAULT_CAP, workers=None):
    _guard(drift, q, u, grid, samples)
    joint = build_joint_covariance(model, grid, cap)
    hits, _ = _simulate(joint, _levels(drift, q, u, grid), samples, seed, workers=workers)
    diag = {"jitter": joint.jitter, "grid_size": len(grid), "joint_dim": joint.dim}
    return _estimate_from_sums("crude", samples, hits, hits, seed, diag)


def estimate_is(model, drift, q, u, grid, samples, seed, cap=DEFAULT_CAP, workers=None, tilt=1.0, rate=None):
    """Mean-shift importance sampling through the most likely point.

    With t* the rate argmin and x* = v* + d(t*) its QP optimizer, the whole
    path mean is moved to h(t) = Cov(X(t), X(t*)) inv(Sigma_t*) x* scaled by
    ``tilt``, so the marginal at t* is centered on x*. Since
    inv(Sigma_t*) x* = w* (the optimal weights), the likelihood ratio only
    involves the t* block of the path.
    """
    _guard(drift, q, u, grid, samples)
    joint = build_joint_covariance(model, grid, cap)
    rate = rate or rate_over_domain(model, drift, q, u, grid, keep_table=False)
    star = int(np.flatnonzero(np.all(grid.points == np.asarray(rate.argmin_t), axis=1))[0])
    theta = tilt * rate.qp.w_star
    sl = slice(star * joint.n, (star + 1) * joint.n)
    shift = joint.matrix[:, sl] @ theta
    s_w, s_w2 = _simulate(
        joint, _levels(drift, q, u, grid), samples, seed, shift=shift, theta=theta, star=star, workers=workers
    )
    diag = {
        "jitter": joint.jitter,
        "grid_size": len(grid),
        "joint_dim": joint.dim,
        "t_star": list(rate.argmin_t),
        "m_of_u_T": rate.m_of_u_T,
        "tilt": tilt,
    }
    return _estimate_from_sums("mean-shift", samples, s_w, s_w2, seed, diag)


ESTIMATORS = {"crude": estimate_crude, "mean-shift": estimate_is, "is": estimate_is}


def truncated_grid(model, drift, q, u, t_min=0.1, points=400, factor=5.0, search=(1e-3, 1e4)):
    """Log grid [t_min, factor * t*] for scalar-time models, t* from the rate."""
    probe = DomainGrid.axis(search[0], search[1], 400, "log")
    t_star = rate_over_domain(model, drift, q, u, probe, keep_table=False).argmin_t[0]
    return DomainGrid.axis(t_min, max(factor * t_star, 2 * t_min), points, "log")


@dataclass(frozen=True)
class SweepRow:
    u: float
    p_hat: float
    neg_log_p: float
    m_of_u_T: float
    ratio: float
    half_width: float
    samples: int

    def to_dict(self):
        return dict(self.__dict__)


SWEEP_COLUMNS = ("u", "p_hat", "neg_log_p", "m_of_u_T", "ratio", "half_width", "samples")


def sweep(model, drift, q, u_list, grid, samples, seed, estimator="crude", cap=DEFAULT_CAP, workers=None):
    """One row per level u. ``grid`` may be a DomainGrid or a callable u -> grid.

    Every level uses the same master seed (common random numbers). The ratio
    -log p_hat / M(u; grid) is None when no exceedance was observed.
    """
    est = ESTIMATORS[estimator]
    rows = []
    for u in u_list:
        g = grid(u) if callable(grid) else grid
        rate = rate_over_domain(model, drift, q, u, g, keep_table=False)
        kwargs = {"rate": rate} if est is estimate_is else {}
        e = est(model, drift, q, u, g, samples, seed, cap=cap, workers=workers, **kwargs)
        nlp = -math.log(e.p_hat) if e.p_hat > 0 else None
        ratio = nlp / rate.m_of_u_T if nlp is not None else None
        rows.append(SweepRow(float(u), e.p_hat, nlp, rate.m_of_u_T, ratio, e.half_width, e.samples))
    return rows
