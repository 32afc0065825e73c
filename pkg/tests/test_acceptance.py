"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a PASS/FAIL line and records it for the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy.stats import norm

from gaussrate import decay, models
from gaussrate import montecarlo as mc
from gaussrate.assumptions import check_a1
from gaussrate.cli import main
from gaussrate.linalg import inverse_spd
from gaussrate.models import BM, OU, DomainGrid, DriftModel
from gaussrate.quadrant import (
    QuadrantProblem,
    brute_force_active_sets,
    dual_ratio,
    random_weights,
    solve_quadrant,
)

from conftest import ACCEPTANCE, random_cov

BM1 = models.independent([BM()])
UNIT = DriftModel(1, "linear-unit")


def verdict(number, title, passed, detail):
    ACCEPTANCE.append((number, title, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'} [{number}] {title}: {detail}")
    assert passed, detail


def test_1_saddle_duality():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_strong, violations = 0.0, 0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        a = random_cov(rng, n)
        q = rng.uniform(0.1, 2.0, n)
        sol = solve_quadrant(QuadrantProblem(inverse_spd(a), q))
        w = np.clip(sol.w_star, 0.0, None)
        worst_strong = max(worst_strong, abs(dual_ratio(a, q, w) - sol.value) / sol.value)
        for trial in random_weights(rng, n, 100, sol.w_star):
            if dual_ratio(a, q, trial) > sol.value * (1 + 1e-9):
                violations += 1
    elapsed = time.perf_counter() - start
    ok = worst_strong <= 1e-9 and violations == 0 and elapsed < 10
    verdict(1, "saddle duality", ok, f"max rel gap {worst_strong:.2e}, {violations} weak violations, {elapsed:.1f}s")


def test_2_oracle_equivalence():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst, worst_zero, zeros, mismatched = 0.0, 0.0, 0, 0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        p = QuadrantProblem(inverse_spd(random_cov(rng, n)), rng.uniform(0.1, 2.0, n), rng.normal(scale=0.5, size=n))
        sol, ref = solve_quadrant(p), brute_force_active_sets(p)
        if not ref.active and ref.value < 1e-20:
            # v = -d is feasible: the optimum is 0 and only roundoff remains
            zeros += 1
            worst_zero = max(worst_zero, abs(sol.value - ref.value))
        else:
            worst = max(worst, abs(sol.value - ref.value) / ref.value)
        if sol.active != ref.active:
            # a tie is degenerate when the differing bounds carry zero weight
            diff = sorted(set(sol.active) ^ set(ref.active))
            if np.max(np.abs(sol.w_star[diff])) > 1e-8:
                mismatched += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and worst_zero <= 1e-20 and mismatched == 0 and elapsed < 30
    detail = (
        f"max rel diff {worst:.2e}, {zeros} zero-optimum instances (max abs diff {worst_zero:.1e}), "
        f"{mismatched} active-set mismatches, {elapsed:.1f}s"
    )
    verdict(2, "oracle equivalence", ok, detail)


def test_3_two_dim_closed_form():
    rng = np.random.default_rng(3)
    worst, below, above = 0.0, 0, 0
    for _ in range(1000):
        s1, s2 = rng.uniform(0.1, 5.0, 2)
        q1, q2 = rng.uniform(0.1, 3.0, 2)
        r = rng.uniform(-0.99, 0.99)
        c = min((s2 / q2) / (s1 / q1), (s1 / q1) / (s2 / q2))
        below += r < c
        above += r >= c
        sigma = [[s1 * s1, r * s1 * s2], [r * s1 * s2, s2 * s2]]
        qp = solve_quadrant(QuadrantProblem(inverse_spd(sigma), [q1, q2])).value
        worst = max(worst, abs(decay.two_dim_closed_form(s1, s2, r, q1, q2) - qp) / qp)
    ok = worst <= 1e-9 and below > 0 and above > 0
    verdict(3, "2-D closed form", ok, f"max rel diff {worst:.2e}, regimes r<c: {below}, r>=c: {above}")


def test_4_bm_unit_drift():
    grid = DomainGrid.axis(0.01, 50, 2000, "log")
    errs = {u: abs(decay.rate_over_domain(BM1, UNIT, [1], u, grid).m_of_u_T - 2 * u) / (2 * u) for u in (2, 4, 8)}
    J = decay.regvar_J(decay.RegVarSpec(alpha=(1.0,), q=(1.0,))).J
    exact = all(decay.regvar_asymptotic(u, lambda s: s, 4.0) == 2 * u for u in (2, 4, 8))
    close = all(decay.regvar_asymptotic(u, lambda s: s, J) == pytest.approx(2 * u, rel=1e-12) for u in (2, 4, 8))
    ok = max(errs.values()) < 1e-3 and abs(J - 4) < 1e-6 and exact and close
    detail = ", ".join(f"u={u}: rel err {e:.1e}" for u, e in errs.items()) + f"; J={J:.12f}"
    verdict(4, "bm with unit drift", ok, detail)


def test_5_regvar_closed_form():
    worst = 0.0
    for alpha in (0.5, 1.0, 1.5):
        for q in (0.5, 1.0, 2.0):
            t = alpha * q / (2 - alpha)
            want = (2 * q / (2 - alpha)) ** 2 / t**alpha
            got = decay.regvar_J(decay.RegVarSpec(alpha=(alpha,), q=(q,))).J
            worst = max(worst, abs(got - want))
    verdict(5, "regvar closed form", worst < 1e-6, f"max abs err {worst:.2e} over 9 (alpha, q) pairs")


def test_6_monte_carlo_ratio_trend():
    start = time.perf_counter()
    rows, ok = [], True
    for u in (2.0, 3.0):
        grid = DomainGrid.axis(0.1, 5 * u, 400, "log")
        rate = decay.rate_over_domain(BM1, UNIT, [1], u, grid)
        est = mc.estimate_crude(BM1, UNIT, [1], u, grid, 1_000_000, seed=6)
        truth = math.exp(-2 * u)
        lo, hi = 0.9 * truth, 1.1 * truth
        inside = est.p_hat + 3 * est.half_width >= lo and est.p_hat - 3 * est.half_width <= hi
        ratio = -math.log(est.p_hat) / rate.m_of_u_T
        rows.append((u, est.p_hat / truth, inside, ratio))
        ok &= inside and 0.85 <= ratio <= 1.35
    ok &= rows[0][3] > rows[1][3]
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    detail = "; ".join(
        f"u={u:g}: p/e^-2u={frac:.3f} {'in' if inside else 'outside'} 3CI band, ratio {ratio:.3f}"
        for u, frac, inside, ratio in rows
    )
    verdict(6, "monte carlo ratio trend", ok, f"{detail}; {elapsed:.0f}s")


def test_7_importance_sampling():
    one = DomainGrid.from_points([1.0])
    truth = norm.sf(4.0)
    n = 100_000
    tilted = mc.estimate_is(BM1, DriftModel(1), [1], 4.0, one, n, seed=7)
    crude = mc.estimate_crude(BM1, DriftModel(1), [1], 4.0, one, n, seed=7)
    covered = abs(tilted.p_hat - truth) <= 3 * tilted.half_width
    # crude relative half-width at the true p, and as realized on this seed
    crude_theory = mc.Z95 * math.sqrt((1 - truth) / (n * truth))
    gain_theory = crude_theory / tilted.relative_half_width
    gain_realized = crude.relative_half_width / tilted.relative_half_width
    ok = covered and gain_theory >= 5 and gain_realized >= 5
    detail = (
        f"p_hat={tilted.p_hat:.4e} vs {truth:.4e} (rel hw {tilted.relative_half_width:.3f}); "
        f"gain vs crude {gain_theory:.0f}x (theory), {gain_realized:.0f}x (realized, {int(crude.sum_w)} hits)"
    )
    verdict(7, "importance sampling", ok, detail)


def test_8_a1_checker():
    grid = DomainGrid.axis(0.1, 10, 20)
    diag = check_a1(models.independent([BM(), BM(), OU(1.0)]), grid, delta=0.1)
    rho = -0.95
    corr = models.mixed([OU(1.0), OU(1.0)], [[1, 0], [rho, math.sqrt(1 - rho * rho)]])
    rep = check_a1(corr, grid, delta=0.1)
    ok = diag.passed and diag.max_offdiag == 0 and not rep.passed and abs(rep.sup_k[0, 1] - 0.95) <= 1e-9
    verdict(8, "A1 checker", ok, f"diagonal sup_k={diag.max_offdiag}, rho=-0.95 sup k12={rep.sup_k[0, 1]:.12f}")


def test_9_determinism(tmp_path, monkeypatch):
    cfg = {
        "kind": "mixed-by-matrix",
        "components": [{"type": "bm"}, {"type": "fbm", "hurst": 0.7}],
        "S": [[1, 0], [0.3, 1]],
        "drift": {"kind": "linear-unit"},
        "grid": {"axis": [[0.1, 6]], "resolution": 120, "spacing": "log"},
        "q": [1, 1],
        "u": 1.0,
        "u_list": [0.5, 1.0],
        "mc": {"samples": 100_000, "seed": 99},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    same = True
    for command in ("simulate", "sweep"):
        for estimator in ("crude", "is"):
            outs = []
            for tag, workers in (("a", "1"), ("b", "1"), ("c", "4")):
                monkeypatch.setenv(mc.WORKERS_ENV, workers)
                out = tmp_path / f"{command}-{estimator}-{tag}"
                assert main([command, "--config", str(path), "--estimator", estimator, "--out", str(out)]) == 0
                outs.append((out / f"{command}.json").read_bytes() + (out / f"{command}.csv").read_bytes())
            same &= outs[0] == outs[1] == outs[2]
    verdict(9, "determinism", same, "simulate/sweep x crude/is: repeat and 1 vs 4 workers byte-identical" if same else "outputs differ")
