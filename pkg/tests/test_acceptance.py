"""Acceptance suite: ten end-to-end criteria, each printing one PASS/FAIL line.

Reference values are computed by independent oracles inside each test
(scipy root finding, direct linear algebra, finite differences).
"""

import math
import time

import numpy as np
import pytest

from council_weights.linalg import solve_dense
from council_weights.model import build_coupling, classify_regime
from council_weights.sim import ChainConfig, exact_moments, gibbs_sample, estimate_moments, verify_optimality
from council_weights.strong import (block_clusters, f_gradient, f_value, minimize_f, mixed_cluster_weights,
                                    solve_curie_weiss, strong_weight_solution)
from council_weights.weak import closed_form_weights, council_correlation, solve_weak_weights
from conftest import make_spec


@pytest.fixture
def report(capsys):
    """Call ``report(n, ok, detail, elapsed, limit)``; prints the verdict line and asserts."""

    def _report(n, ok, detail, elapsed, limit):
        ok_time = elapsed < limit
        verdict = "PASS" if ok and ok_time else "FAIL"
        with capsys.disabled():
            print(f"\n[acceptance {n:2d}] {verdict} {detail} ({elapsed:.3f} s, limit {limit:g} s)")
        assert ok, detail
        assert ok_time, f"runtime {elapsed:.3f} s exceeds {limit} s"

    return _report


def test_01_square_root_law(report):
    t0 = time.perf_counter()
    alphas = np.array([0.4, 0.3, 0.2, 0.1])
    target = np.sqrt(alphas) / np.sqrt(alphas).max()
    worst = 0.0
    for J in (build_coupling("homogeneous", {"beta": 0.0}, 4),
              build_coupling("uniform", {"j0": 0.5, "jbar": 0.0}, 4),
              build_coupling("hostile", {"j0": 0.5, "jbar": 0.0}, 4)):
        w = solve_weak_weights(J, alphas)
        worst = max(worst, float(np.max(np.abs(w / target - 1.0))))
    report(1, worst <= 1e-10, f"square-root law, max relative deviation {worst:.2e}",
           time.perf_counter() - t0, 1.0)


def _random_weak(family, rng, M):
    while True:
        if family == "homogeneous":
            params = {"beta": rng.uniform(0.0, 0.999 / M)}
        elif family == "hostile":
            j0 = rng.uniform(0.01, 0.99)
            params = {"j0": j0, "jbar": rng.uniform(0.0, 0.999) * j0 / (M - 1)}
        else:
            jbar = rng.uniform(0.0, 0.3)
            params = {"j0": jbar + rng.uniform(1e-3, 0.8), "jbar": jbar}
            if family == "two_cluster":
                M1 = int(rng.integers(1, M))
                params.update(M1=M1, M2=M - M1)
        J = build_coupling(family, params, M)
        if classify_regime(J).tag == "weak":
            return J


def test_02_closed_form_equals_general_solve(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for family in ("homogeneous", "uniform", "two_cluster", "hostile"):
        for _ in range(50):
            M = int(rng.integers(2, 7))
            J = _random_weak(family, rng, M)
            alphas = rng.dirichlet(np.ones(M))
            dense = solve_weak_weights(J, alphas, normalize=False)
            closed, _ = closed_form_weights(J, alphas)
            scale = (closed @ dense) / (dense @ dense)
            if scale <= 0:
                worst = math.inf
                continue
            worst = max(worst, float(np.max(np.abs(closed / scale - dense)) / np.max(np.abs(dense))))
    report(2, worst <= 1e-8, f"closed form vs dense solve, 200 draws, max deviation {worst:.2e}",
           time.perf_counter() - t0, 5.0)


def test_03_finite_n_arcsin_law(report):
    t0 = time.perf_counter()
    spec = make_spec("homogeneous", {"beta": 0.25}, (2001, 2001))
    corr = float(exact_moments(spec).chi_corr[0, 1])
    oracle = 2.0 / math.pi * math.asin(1.0 / 3.0)
    ok = abs(corr - oracle) <= 0.01 and abs(corr - 0.216340) <= 0.01
    report(3, ok, f"E(chi1 chi2) = {corr:.6f}, arcsin value {oracle:.7f}", time.perf_counter() - t0, 120.0)


def test_04_two_point_concentration(report):
    t0 = time.perf_counter()
    spec = make_spec("homogeneous", {"beta": 1.2}, (400, 400))
    samples = gibbs_sample(spec, ChainConfig(sweeps=100_000, burn_in=1000, seed=4))
    x = samples.margins[:, 0] / 400.0
    m_hat = float(np.median(np.abs(x)))
    mass = float(np.mean(np.abs(np.abs(x) - m_hat) <= 0.05))
    agree = float(np.mean(np.sign(samples.margins[:, 0]) == np.sign(samples.margins[:, 1])))
    cw = solve_curie_weiss(1.2, [0.5, 0.5], weighted=True).magnetizations[0]
    ok = mass >= 0.99 and agree >= 0.99 and abs(m_hat - cw) <= 0.05
    report(4, ok, f"mass near +/-{m_hat:.4f} = {mass:.4f}, sign agreement {agree:.4f}, "
                  f"mean-field m = {cw:.5f}", time.perf_counter() - t0, 120.0)


def test_05_exact_vs_mcmc(report, small_specs):
    t0 = time.perf_counter()
    worst = 0.0
    for spec in small_specs.values():
        exact = exact_moments(spec)
        est = estimate_moments(gibbs_sample(spec, ChainConfig(sweeps=100_000, burn_in=1000, seed=5, chains=2)))
        for key in ("chi_corr", "chi_S", "S_second"):
            err = np.abs(getattr(est, key) - getattr(exact, key))
            se = est.std_errors[key]
            z = np.where(se > 0, err / np.where(se > 0, se, 1.0), np.where(err > 1e-12, np.inf, 0.0))
            worst = max(worst, float(np.max(z)))
    report(5, worst <= 4.0, f"largest |MCMC - exact| / SE = {worst:.2f}", time.perf_counter() - t0, 60.0)


def test_06_normal_equations_optimal(report, small_specs):
    t0 = time.perf_counter()
    improvements = 0
    for spec in small_specs.values():
        stats = exact_moments(spec)
        sigma = math.sqrt(spec.sizes.N)
        w = solve_dense(stats.chi_corr, stats.b_vector(sigma))
        improvements += verify_optimality(stats, w, sigma, 100, 0.05, seed=6).improved
    report(6, improvements == 0, f"{improvements} improving perturbations out of 300",
           time.perf_counter() - t0, 10.0)


def test_07_strong_degeneracy(report):
    t0 = time.perf_counter()
    checks = []
    sol = strong_weight_solution(build_coupling("uniform", {"j0": 1.2, "jbar": 0.5}, 3), [0.5, 0.3, 0.2])
    checks.append(("uniform", sol.tag == "any_positive"))
    sol = strong_weight_solution(build_coupling("two_cluster", {"j0": 1.5, "jbar": 0.5, "M1": 1, "M2": 1}, 2),
                                 [0.5, 0.5])
    checks.append(("two-cluster", sol.tag == "cluster_constrained" and abs(sol.theta) < 1e-12))
    for M in (2, 4):
        sol = strong_weight_solution(build_coupling("hostile", {"j0": 1.5, "jbar": 0.3}, M), [1 / M] * M)
        checks.append((f"hostile M={M}", sol.tag == "zero"))
    a = np.full(3, 1 / 3)
    J = build_coupling("hostile", {"j0": 1.5, "jbar": 0.5}, 3)
    res = minimize_f(J, a)
    sol = strong_weight_solution(J, a, res)
    sigs = np.array(res.signatures)
    mags = np.abs(np.array(res.magnetizations))
    m = np.array([mags[(sigs[:, l] > 0) & (sigs.sum(axis=1) > 0), l].mean() for l in range(3)])
    checks.append(("hostile M=3", sol.tag == "unique" and np.allclose(sol.weights, m * 4 / 27, rtol=1e-9)))
    failed = [name for name, ok in checks if not ok]
    report(7, not failed, "strong-regime tags " + ("all as expected" if not failed else f"wrong for {failed}"),
           time.perf_counter() - t0, 30.0)


def test_08_gradient_check(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        M = int(rng.integers(2, 6))
        fam = rng.choice(["uniform", "two_cluster", "hostile"])
        j0 = rng.uniform(0.2, 2.0)
        if fam == "hostile":
            params = {"j0": j0, "jbar": rng.uniform(0, 0.95) * j0 / (M - 1)}
        else:
            params = {"j0": j0, "jbar": rng.uniform(0, 0.95) * j0}
            if fam == "two_cluster":
                params.update(M1=1, M2=M - 1)
        J = build_coupling(str(fam), params, M)
        a = rng.dirichlet(np.ones(M))
        y = rng.normal(scale=2.0, size=M)
        g = f_gradient(y, J, a)
        h = 1e-6 * max(1.0, float(np.max(np.abs(y))))
        fd = np.array([(f_value(y + h * e, J, a) - f_value(y - h * e, J, a)) / (2 * h) for e in np.eye(M)])
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(float(np.max(np.abs(g))), 1e-12)))
    report(8, worst <= 1e-6, f"gradient vs central differences, max relative error {worst:.2e}",
           time.perf_counter() - t0, 5.0)


def test_09_hostile_correlation_bound(report):
    t0 = time.perf_counter()
    worst, count = -math.inf, 0
    for M in (2, 3, 5):
        for j0 in np.linspace(0.02, 0.98, 20):
            for frac in np.linspace(0.0, 0.98, 20):
                jbar = frac * j0 / (M - 1)
                J = build_coupling("hostile", {"j0": j0, "jbar": jbar}, M)
                if classify_regime(J).tag != "weak":
                    continue
                count += 1
                worst = max(worst, council_correlation(J) - 1.0 / (M - 1))
    report(9, worst <= 1e-12, f"{count} admissible points, max a - 1/(M-1) = {worst:.3e}",
           time.perf_counter() - t0, 1.0)


def test_10_mixed_clusters(report):
    t0 = time.perf_counter()
    J = build_coupling("block", {"blocks": [{"M": 2, "family": "homogeneous", "beta": 0.2},
                                            {"M": 2, "family": "uniform", "j0": 1.2, "jbar": 0.5}]}, 4)
    sol = mixed_cluster_weights(block_clusters(J, [0.3, 0.2, 0.3, 0.2]))
    totals = sol.block_totals()
    ok = totals[0] == 0.0 and totals[1] > 0.0 and sol.sigma == "N"
    report(10, ok, f"block totals weak={totals[0]:g}, strong={totals[1]:.5f}", time.perf_counter() - t0, 10.0)
