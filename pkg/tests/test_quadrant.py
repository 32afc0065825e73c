import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussrate.errors import DimensionTooLarge, NotPositiveDefinite, ZeroWeight
from gaussrate.linalg import inverse_spd
from gaussrate.quadrant import (
    QuadrantProblem,
    brute_force_active_sets,
    dual_ratio,
    random_weights,
    solve_quadrant,
    solve_quadrant_psd,
    verify_saddle,
)

from conftest import random_cov

# (covariance, v*, value, w*, active) with b = (1, 1), d = 0
EXAMPLES = [
    (np.eye(2), [1, 1], 2.0, [1, 1], (0, 1)),
    ([[1, 0.5], [0.5, 1]], [1, 1], 4 / 3, [2 / 3, 2 / 3], (0, 1)),
    ([[1, 1.6], [1.6, 4]], [1, 1.6], 1.0, [1, 0], (0,)),
]


@pytest.mark.parametrize("solver", [solve_quadrant, brute_force_active_sets])
@pytest.mark.parametrize("cov, v, value, w, active", EXAMPLES)
def test_examples(solver, cov, v, value, w, active):
    sol = solver(QuadrantProblem(inverse_spd(cov), [1.0, 1.0]))
    np.testing.assert_allclose(sol.v_star, v, atol=1e-12)
    assert sol.value == pytest.approx(value, rel=1e-12)
    np.testing.assert_allclose(sol.w_star, w, atol=1e-12)
    assert sol.active == active


def test_free_coordinate_is_stationary():
    # conditional mean of the free coordinate: 1.6 * 1 / 1 = 1.6 > 1
    sol = solve_quadrant(QuadrantProblem(inverse_spd([[1, 1.6], [1.6, 4]]), [1, 1]))
    assert abs(sol.w_star[1]) <= 1e-9
    assert sol.kkt_residual <= 1e-12


def test_offset_is_a_shift():
    H = inverse_spd([[1, 0.3], [0.3, 2]])
    d = np.array([0.5, -0.2])
    shifted = solve_quadrant(QuadrantProblem(H, [1.0, 1.0], d))
    plain = solve_quadrant(QuadrantProblem(H, [1.5, 0.8]))
    assert shifted.value == pytest.approx(plain.value, rel=1e-13)
    np.testing.assert_allclose(shifted.v_star + d, plain.v_star, atol=1e-13)


def test_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        solve_quadrant(QuadrantProblem([[1, 0], [0, 0]], [1, 1]))


def test_brute_force_dimension_cap():
    with pytest.raises(DimensionTooLarge):
        brute_force_active_sets(QuadrantProblem(np.eye(21), np.ones(21)))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        QuadrantProblem(np.eye(2), [1, 1, 1])


def _check_solution(p, sol):
    assert np.all(sol.v_star >= p.b - 1e-12)
    assert np.all(sol.w_star >= -1e-10)
    for i in range(p.dim):
        if sol.w_star[i] > 1e-10:
            assert abs(sol.v_star[i] - p.b[i]) <= 1e-10
    free = [i for i in range(p.dim) if i not in sol.active]
    assert np.all(np.abs(sol.w_star[free]) <= 1e-9)
    assert sol.value == pytest.approx(p.objective(sol.v_star), rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_matches_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    p = QuadrantProblem(inverse_spd(random_cov(rng, n)), rng.uniform(0.1, 2, n), rng.normal(scale=0.5, size=n))
    sol = solve_quadrant(p)
    ref = brute_force_active_sets(p)
    _check_solution(p, sol)
    _check_solution(p, ref)
    assert sol.value == pytest.approx(ref.value, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_duality(seed, n):
    rng = np.random.default_rng(seed)
    a = random_cov(rng, n)
    q = rng.uniform(0.1, 2, n)
    sol = solve_quadrant(QuadrantProblem(inverse_spd(a), q))
    assert dual_ratio(a, q, sol.w_star.clip(0)) == pytest.approx(sol.value, rel=1e-9)
    for w in random_weights(rng, n, 200, sol.w_star):
        assert dual_ratio(a, q, w) <= sol.value + 1e-9


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.floats(0.1, 10))
def test_homogeneity(seed, n, c):
    rng = np.random.default_rng(seed)
    H = inverse_spd(random_cov(rng, n))
    q = rng.uniform(0.1, 2, n)
    base = solve_quadrant(QuadrantProblem(H, q)).value
    assert solve_quadrant(QuadrantProblem(H, c * q)).value == pytest.approx(c * c * base, rel=1e-10)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_monotone_in_bound(seed, n):
    rng = np.random.default_rng(seed)
    H = inverse_spd(random_cov(rng, n))
    q = rng.uniform(0.1, 2, n)
    d = rng.normal(scale=0.3, size=n)
    bigger = q + rng.uniform(0, 1, n) * (rng.random(n) < 0.5)
    lo = solve_quadrant(QuadrantProblem(H, q, d)).value
    hi = solve_quadrant(QuadrantProblem(H, bigger, d)).value
    assert hi >= lo - 1e-12 * (1 + lo)


def test_large_dimension(rng):
    n = 40
    a = random_cov(rng, n)
    p = QuadrantProblem(inverse_spd(a), rng.uniform(0.5, 1.5, n))
    sol = solve_quadrant(p)
    _check_solution(p, sol)
    # weak duality bound against random weights, strong at w*
    assert dual_ratio(a, p.b, sol.w_star.clip(0)) == pytest.approx(sol.value, rel=1e-9)


# -- dual ratio and saddle report -----------------------------------------


def test_dual_ratio_examples():
    assert dual_ratio(np.eye(2), [1, 1], [1, 1]) == 2.0
    a = [[1, 0.5], [0.5, 1]]
    assert dual_ratio(a, [1, 1], [2 / 3, 2 / 3]) == pytest.approx(4 / 3, rel=1e-15)
    assert dual_ratio(a, [1, 1], [1, 0]) == 1.0


def test_dual_ratio_errors():
    with pytest.raises(ZeroWeight):
        dual_ratio(np.eye(2), [1, 1], [0, 0])
    with pytest.raises(ValueError):
        dual_ratio(np.eye(2), [1, 1], [1, -1])


@pytest.mark.parametrize(
    "a, q, primal",
    [
        (np.eye(3), [1, 1, 1], 3.0),
        ([[1, 0.5], [0.5, 1]], [1, 1], 4 / 3),
        ([[1, 1.6], [1.6, 4]], [1, 1], 1.0),
    ],
)
def test_verify_saddle_examples(a, q, primal):
    rep = verify_saddle(a, q, trials=500, seed=3)
    assert rep.primal == pytest.approx(primal, rel=1e-12)
    assert rep.ratio_at_w_star == pytest.approx(primal, rel=1e-12)
    assert rep.max_sampled_ratio <= primal + 1e-9
    assert rep.holds


def test_verify_saddle_weights_of_correlated_pair():
    rep = verify_saddle([[1, 1.6], [1.6, 4]], [1, 1])
    np.testing.assert_allclose(rep.w_star, [1, 0], atol=1e-12)


def test_saddle_weights_do_not_depend_on_level():
    a = [[1, 0.2, -0.3], [0.2, 2, 0.5], [-0.3, 0.5, 1.5]]
    w1 = verify_saddle(a, [1, 2, 1]).w_star
    w3 = verify_saddle(a, [3, 6, 3]).w_star
    np.testing.assert_allclose(w3 / 3, w1, rtol=1e-12)


# -- semidefinite forms ---------------------------------------------------


def test_psd_zero_form():
    sol = solve_quadrant_psd(QuadrantProblem(np.zeros((3, 3)), [1, 2, 3], [0.5, 0, -1]))
    assert sol.value == 0.0


def test_psd_decoupled():
    sol = solve_quadrant_psd(QuadrantProblem(np.diag([1.0, 0.0]), [2, 5]))
    assert sol.value == pytest.approx(4.0, rel=1e-12)
    np.testing.assert_allclose(sol.v_star, [2, 5], atol=1e-12)
    assert sol.attained


def test_psd_uses_exact_path_for_definite_input():
    p = QuadrantProblem(inverse_spd([[1, 0.5], [0.5, 1]]), [1, 1])
    assert solve_quadrant_psd(p).method == "active-set"


def _grid_min(G, q, step=0.01, width=10.0):
    """min over v in q + [0, width]^3 (step grid) of |G v|^2."""
    ax = np.arange(int(round(width / step)) + 1) * step
    Y, Z = np.meshgrid(ax + q[1], ax + q[2], indexing="ij")
    best = np.inf
    for x in ax + q[0]:
        r0 = G[0, 0] * x + G[0, 1] * Y + G[0, 2] * Z
        r1 = G[1, 0] * x + G[1, 1] * Y + G[1, 2] * Z
        best = min(best, float((r0 * r0 + r1 * r1).min()))
    return best


@pytest.mark.parametrize("seed", [3])
def test_psd_rank_two_against_grid(seed):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(2, 3))
    q = rng.uniform(0.5, 2, size=3)
    sol = solve_quadrant_psd(QuadrantProblem(G.T @ G, q))
    assert np.all(sol.v_star <= q + 10)
    assert sol.value == pytest.approx(_grid_min(G, q), abs=1e-3)


@pytest.mark.parametrize("seed", range(8))
def test_psd_rank_deficient_kkt(seed):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(2, 4))
    p = QuadrantProblem(G.T @ G, rng.uniform(0.5, 2, 4), rng.normal(size=4))
    sol = solve_quadrant_psd(p)
    assert sol.attained
    assert sol.kkt_residual <= 1e-9 * (1 + np.abs(sol.v_star).max())
    # the finest regularized solve cannot do better than the exact minimum
    fine = solve_quadrant_psd(p, jitters=(1e-8,))
    assert sol.value <= fine.value + 1e-9


def test_psd_far_minimizer():
    # the zero set of the form meets the quadrant only far from the corner
    rng = np.random.default_rng(4)
    G = rng.normal(size=(2, 4))
    p = QuadrantProblem(G.T @ G, rng.uniform(0.5, 2, 4), rng.normal(size=4))
    sol = solve_quadrant_psd(p)
    assert sol.value == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(sol.v_star) > 50
