"""Grid-level checks of the standing assumptions.

``check_a1`` bounds the off-diagonal entries of the normalized precision
matrix K_t away from one. k_ij(t) is the cosine of the angle between the
columns i and j of inv(B_t), B_t B_t' = Sigma_t, so the report also carries
the smallest such angle. All checks are restricted to the supplied grid.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DegenerateCovariance, NotPositiveDefinite
from .models import threshold_u0

DEFAULT_DELTA = 1e-3


@dataclass(frozen=True)
class A1Report:
    sup_k: np.ndarray
    argmax: dict
    delta: float
    grid_size: int
    passed: bool
    min_angle_deg: float

    @property
    def max_offdiag(self):
        n = self.sup_k.shape[0]
        if n < 2:
            return -np.inf
        return float(np.max(self.sup_k[np.triu_indices(n, 1)]))

    def to_dict(self):
        n = self.sup_k.shape[0]
        pairs = [
            {"i": i, "j": j, "sup_k": float(self.sup_k[i, j]), "argmax": list(self.argmax[(i, j)])}
            for i in range(n)
            for j in range(i + 1, n)
        ]
        return {
            "pass": self.passed,
            "delta": self.delta,
            "max_offdiag_k": None if n < 2 else self.max_offdiag,
            "min_angle_deg": None if n < 2 else self.min_angle_deg,
            "pairs": pairs,
            "grid_size": self.grid_size,
            "scope": "checked on the working grid only; not a proof over the full domain",
        }


def check_a1(model, grid, delta=DEFAULT_DELTA):
    """Suprema of k_ij(t) over the grid; passes iff every one is below 1 - delta."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = model.n
    sup_k = np.full((n, n), -np.inf)
    argmax = {}
    iu = np.triu_indices(n, 1)
    for t in grid.points:
        try:
            k = linalg.partial_corr(model.sigma_at(t))
        except NotPositiveDefinite:
            raise DegenerateCovariance(t) from None
        better = k > sup_k
        for i, j in zip(*iu):
            if better[i, j]:
                sup_k[i, j] = k[i, j]
                argmax[(int(i), int(j))] = tuple(float(x) for x in t)
    sup_k = np.triu(np.where(np.isfinite(sup_k), sup_k, 0.0), 1)
    if n < 2:
        return A1Report(sup_k, argmax, delta, len(grid), True, 180.0)
    top = float(np.max(sup_k[iu]))
    angle = float(np.degrees(np.arccos(np.clip(top, -1.0, 1.0))))
    return A1Report(sup_k, argmax, delta, len(grid), top < 1.0 - delta, angle)


def check_threshold(drift, q, u, grid):
    return u > threshold_u0(drift, q, grid)


def a2_tail_heuristic(model, drift, grid, eps=(0.1, 0.5, 1.0), tail_fraction=0.25):
    """Heuristic look at almost-sure boundedness of X_i(t) - eps d_i(t).

    For each eps and coordinate, checks that sigma_i^2(t) / (eps d_i(t))^2 is
    nonincreasing over the last ``tail_fraction`` of the grid (ordered by
    |t|). Not a proof; a finite computation cannot establish the property.
    """
    pts = grid.points
    order = np.argsort(np.linalg.norm(pts, axis=1), kind="stable")
    tail = pts[order[int(len(order) * (1 - tail_fraction)):]]
    if len(tail) < 2:
        tail = pts[order[-2:]]
    var = np.array([np.diag(model.sigma_at(t)) for t in tail])
    d = np.array([drift.drift_at(t) for t in tail])
    result = {}
    for e in eps:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = var / (e * d) ** 2
        ok = np.all(d[-1] > 0) and bool(np.all(np.diff(ratio, axis=0) <= 1e-12 * (1 + np.abs(ratio[:-1]))))
        result[str(e)] = bool(ok)
    return {"heuristic": True, "decreasing": result, "tail_points": int(len(tail))}
