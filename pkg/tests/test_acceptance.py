"""End-to-end acceptance criteria.

Each test prints one PASS/FAIL line (repeated in the terminal summary) and
asserts the criterion at its stated tolerance.
"""
import math
import time

import numpy as np

from pmeanlab import fields
from pmeanlab.asymptotics import amvp_residual_sweep, verify_elliptic, verify_parabolic
from pmeanlab.compare import continuity_contrast, monotonicity_search, replay_pair
from pmeanlab.oracles import FormulaId, SuiteSettings, heat_star, run_oracle_suite
from pmeanlab.plaplace import case_one_coefficient, elliptic_coefficient, random_probe
from pmeanlab.pmean import Exponent, mpr_mean_samples, p_mean_batch
from pmeanlab.solver import GridProblem, residual_report, solve

INF = math.inf


def test_oracle_suite(verdict):
    t0 = time.perf_counter()
    suite = run_oracle_suite(SuiteSettings(dimensions=(2, 3), exponents=(1.5, 2.0, 3.0, 4.0), pairs=20))
    golden = [r for r in suite.reports if r.formula_id is FormulaId.C_ALPHA_BETA
              and r.parameters.get("alpha") == 1.0 and r.parameters.get("beta") == 1.0
              and r.parameters.get("N") == 2]
    closed = heat_star(1.0, 1.0, 2)
    seconds = time.perf_counter() - t0
    mass_gap = max(abs(m - 4.0) for _, m in suite.masses)
    ok = (suite.passed and len(golden) == 1 and golden[0].rel_gap <= 1e-6
          and abs(closed - 1 / (2 * math.pi)) <= 1e-15 and seconds < 60)
    worst = ", ".join(f"{k} {v:.1e}" for k, v in sorted(suite.worst().items()))
    verdict("1 oracle suite", ok, f"{len(suite.reports)} comparisons, worst rel gap {worst}; "
            f"mass gap {mass_gap:.1e}", seconds)
    assert ok


def test_elliptic_asymptotics(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, worst_p2, failures = 0.0, 0.0, []
    for geometry in ("Ball", "Sphere"):
        for n in (2, 3):
            for p in (1.0, 1.5, 2.0, 3.0, 4.0, INF):
                for _ in range(10):
                    probe = random_probe(rng, n)
                    rep = verify_elliptic(probe, np.zeros(n), p, geometry)
                    tol = 1e-10 if p == 2.0 else 1e-3
                    if p == 2.0:
                        worst_p2 = max(worst_p2, rep.rel_error)
                    else:
                        worst = max(worst, rep.rel_error)
                    if not rep.rel_error <= tol:
                        failures.append((geometry, n, p, rep.rel_error))
    seconds = time.perf_counter() - t0
    ok = not failures and seconds < 120
    verdict("2 elliptic asymptotics", ok, f"240 sweeps, worst rel err {worst:.1e} "
            f"(p=2: {worst_p2:.1e}), failures {failures[:3]}", seconds)
    assert ok


def test_parabolic_asymptotics(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, failures = 0.0, []
    for p in (1.0, 2.0, 3.0, INF):
        for _ in range(5):
            probe = random_probe(rng, 2, parabolic=True)
            rep = verify_parabolic(probe, np.zeros(2), 0.0, p)
            worst = max(worst, rep.rel_error)
            if not rep.rel_error <= 1e-2:
                failures.append((p, rep.rel_error))
    caloric = verify_parabolic(fields.caloric(2), np.array([0.5, 0.3]), 1.0, 2.0)
    seconds = time.perf_counter() - t0
    ok = not failures and abs(caloric.fitted_limit) <= 1e-3 and seconds < 180
    verdict("3 parabolic asymptotics", ok, f"20 sweeps, worst rel err {worst:.1e}; "
            f"caloric |fitted| {abs(caloric.fitted_limit):.1e}", seconds)
    assert ok


def test_amvp_residuals(verdict):
    t0 = time.perf_counter()
    cases = [
        ("harmonic p=2", fields.harmonic_polynomial(2), np.array([0.5, 0.25]), 2.0),
        ("radial p=4", fields.radial_p_harmonic(2, 4.0), np.array([1.0, 0.0]), 4.0),
        ("Aronsson p=inf", fields.aronsson(), np.array([0.7, 0.5]), INF),
    ]
    parts, ok = [], True
    for name, f, x, p in cases:
        rep = amvp_residual_sweep(f, x, p)
        good = abs(rep.fitted_limit) <= 1e-2 and rep.monotone
        ok &= good
        parts.append(f"{name} |delta_0| {abs(rep.fitted_limit):.1e} monotone {rep.monotone}")
    verdict("4 AMVP residuals", ok, "; ".join(parts), time.perf_counter() - t0)
    assert ok


def _sample_sets(rng, m, k):
    scale = 10.0 ** rng.uniform(-2, 2, size=(m, 1))
    z = rng.standard_normal((m, k)) + rng.uniform(-1, 1, size=(m, 1))
    ties = rng.random(m) < 0.25
    z[ties] = np.round(4 * z[ties]) / 4
    weights = rng.uniform(0.1, 1.0, size=(m, k))
    return scale * z, weights


def _characterization_ok(u, w, mu, p):
    lo, hi = u.min(axis=1), u.max(axis=1)
    rng_ = hi - lo
    wsum = w.sum(axis=1)
    if p == INF:
        return np.abs(mu - 0.5 * (lo + hi)) <= 1e-15 * np.maximum(np.abs(lo), np.abs(hi))
    if p == 1.0:
        above = np.sum(w * (u > mu[:, None]), axis=1)
        below = np.sum(w * (u < mu[:, None]), axis=1)
        return (above <= 0.5 * wsum * (1 + 1e-12)) & (below <= 0.5 * wsum * (1 + 1e-12))

    def g(lam):
        d = u - lam[:, None]
        return np.sum(w * np.sign(d) * np.abs(d) ** (p - 1.0), axis=1)

    # |g(mu)| <= tol, or mu within the bisection bracket width of the sign change
    gtol = 1e-12 * wsum * rng_ ** (p - 1.0)
    step = 1e-14 * rng_
    flat = rng_ == 0
    return flat | (np.abs(g(mu)) <= gtol) | ((g(mu - step) >= -gtol) & (g(mu + step) <= gtol))


def test_functional_properties(verdict):
    t0 = time.perf_counter()
    m, k = 10_000, 12
    counts = {}
    for i, p in enumerate((1.0, 1.7, 2.0, 3.5, INF)):
        rng = np.random.default_rng(100 + i)
        u, w = _sample_sets(rng, m, k)
        r = u.max(axis=1) - u.min(axis=1)
        mean = lambda vals: p_mean_batch(vals, w, Exponent.coerce(p))
        mu = mean(u)
        c = rng.uniform(-5, 5, size=m) * np.maximum(r, 1.0)
        alpha = rng.uniform(-3, 3, size=m)
        e_pos = rng.uniform(0, 1, size=(m, k)) * (rng.random((m, k)) < 0.5) * r[:, None]
        e_sup = rng.uniform(-0.1, 0.1, size=(m, k)) * r[:, None]
        bad = {
            "shift": np.abs(mean(u + c[:, None]) - (mu + c)) > 1e-12 * np.maximum(r, np.abs(c)),
            "homogeneity": np.abs(mean(alpha[:, None] * u) - alpha * mu) > 1e-12 * np.abs(alpha) * r,
            "range": (mu < u.min(axis=1)) | (mu > u.max(axis=1)),
            "monotonicity": mu > mean(u + e_pos) + 1e-10,
            "nonexpansive": np.abs(mean(u + e_sup) - mu) > np.abs(e_sup).max(axis=1) + 1e-10,
            "characterization": ~_characterization_ok(u, w, mu, p),
        }
        counts[p] = {name: int(v.sum()) for name, v in bad.items()}
    seconds = time.perf_counter() - t0
    total = sum(sum(c.values()) for c in counts.values())
    ok = total == 0 and seconds < 60
    detail = f"5 x {m} sets, {total} violations" + ("" if total == 0 else f" {counts}")
    verdict("5 functional properties", ok, detail, seconds)
    assert ok


def test_comparison_suite(verdict):
    t0 = time.perf_counter()
    contrast = continuity_contrast(200, 2)
    contrast_ok = (abs(contrast.p_mean - 2 / 202) <= 1e-4
                   and abs(contrast.min_max_mean - 0.5) <= 1e-12)
    mpr4 = monotonicity_search("mpr", 4.0, pairs=10_000, seed=0)
    var4 = monotonicity_search("pmean", 4.0, pairs=10_000, seed=0)
    replay_ok = True
    for wit in mpr4.witnesses:
        a, b = replay_pair(mpr4.seed, wit.index, mpr4.pairs, mpr4.samples)
        w = np.full(mpr4.samples, 1.0 / mpr4.samples)
        ma, mb = mpr_mean_samples(np.vstack([a, b]), w, 4.0, 2)
        replay_ok &= bool(np.all(a <= b) and ma > mb)
    ok = contrast_ok and mpr4.violations >= 1 and replay_ok and var4.violations == 0
    verdict("6 comparison suite", ok,
            f"mu_2 {contrast.p_mean:.6f} vs {2 / 202:.6f}, min-max {contrast.min_max_mean!r}; "
            f"mu_4* violations {mpr4.violations} (max gap {mpr4.max_gap:.1e}), "
            f"mu_4 violations {var4.violations}", time.perf_counter() - t0)
    assert ok


def _annulus(p):
    k = (p - 2.0) / (p - 1.0)
    exact = lambda y: np.linalg.norm(y, axis=1) ** k
    ring = lambda y: (np.linalg.norm(y, axis=1) >= 0.5) & (np.linalg.norm(y, axis=1) <= 1.5)
    return exact, ring


def test_solver(verdict):
    t0 = time.perf_counter()
    square = ((0.0, 1.0), (0.0, 1.0))
    harmonic = lambda y: y[:, 0] ** 2 - y[:, 1] ** 2
    sq = solve(GridProblem(square, 1 / 32, 1 / 8, 2.0, harmonic))
    sq_err = residual_report(sq, harmonic).error_sup
    exact, ring = _annulus(4.0)
    an = solve(GridProblem(((-1.5, 1.5), (-1.5, 1.5)), 1 / 64, 1 / 16, 4.0, exact, domain=ring))
    an_err = residual_report(an, exact).error_sup

    structural = True
    for sol in (sq, an):
        lo, hi = sol.boundary_range
        inner = sol.values[sol.interior]
        structural &= bool(lo <= inner.min() and inner.max() <= hi)
    for p in (2.0, 4.0):
        low = solve(GridProblem(square, 1 / 32, 1 / 8, p, harmonic))
        high = solve(GridProblem(square, 1 / 32, 1 / 8, p, lambda y: harmonic(y) + 0.2 * y[:, 0] ** 2))
        structural &= bool(np.all(low.values[low.interior] <= high.values[high.interior]))
    seconds = time.perf_counter() - t0
    ok = (sq.converged and an.converged and sq_err <= 2e-2 and an_err <= 5e-2
          and structural and seconds < 300)
    verdict("7 solver", ok, f"square p=2 err {sq_err:.1e}, annulus p=4 err {an_err:.1e}, "
            f"maximum principle and comparison {structural}", seconds)
    assert ok


def test_case_one_consistency(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    gaps = []
    for i in range(100):
        probe = random_probe(rng, 2 + i % 2)
        gaps.append(abs(elliptic_coefficient(probe, 1.0) - case_one_coefficient(probe)))
    worst = max(gaps)
    ok = worst <= 1e-12
    verdict("8 p=1 formula consistency", ok, f"100 probes, max gap {worst:.1e}",
            time.perf_counter() - t0)
    assert ok

