"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Runtimes are measured inside each test and are part of the verdict.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from fiberlift import cli
from fiberlift.lifting import check_lift_uniqueness, lift_measure
from fiberlift.measures import EmpiricalMeasure, disintegrate, invariant_grid_cloud
from fiberlift.render import render_attractor
from fiberlift.stats import (clt_diagnostic, correlation_lift_bound_check, correlations,
                             green_kubo, lagged_covariances, orbit_series)
from fiberlift.systems import (ModulusClass, estimate_shrinking, expanding_map, make_system,
                               pomeau_manneville, solenoid_system)
from fiberlift.thermo import (Potential, build_coboundary, energy_consistency, exponent_arithmetic,
                              holder_quotients)
from fiberlift.transfer import (build_ulam, dense_spectrum, disintegration_via_transfer,
                                invariant_density)
from fiberlift.transport import emd, vertical_wasserstein, wasserstein_discrete

DATA = Path(__file__).parent / "data"
LAM = 0.4
LIP = ModulusClass("holder", 1.0)


@pytest.fixture
def verdict(capsys):
    """``verdict(k, ok, detail, t0, limit)`` prints one line, then asserts."""
    def _v(k, ok, detail, t0=None, limit=None):
        took = None if t0 is None else time.perf_counter() - t0
        if limit is not None and took > limit:
            ok = False
            detail += f"; runtime {took:.1f}s > {limit}s"
        tail = "" if took is None else f" [{took:.1f}s]"
        with capsys.disabled():
            print(f"\nCRITERION {k:2d}: {'PASS' if ok else 'FAIL'} - {detail}{tail}")
        assert ok, detail
    return _v


@pytest.fixture(scope="module")
def sol():
    return solenoid_system(LAM)


@pytest.fixture(scope="module")
def sol_shrink(sol):
    return estimate_shrinking(sol, n_max=30, fibers=16, pairs_per_fiber=16)


def test_c01_ot_oracle(verdict):
    t0 = time.perf_counter()
    rows = json.loads((DATA / "ot_vertices.json").read_text())
    errs = [abs(emd(np.array(r["a"]), np.array(r["b"]), np.array(r["C"])).cost - r["vertex_min"])
            for r in rows]
    sizes = max(max(len(r["a"]), len(r["b"])) for r in rows)
    ok = len(rows) == 50 and sizes <= 6 and max(errs) <= 1e-9
    verdict(1, ok, f"{len(rows)} instances, max |emd - vertex min| = {max(errs):.2e}", t0, 10)


def test_c02_vertical_dominance(verdict, sol):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = -np.inf
    for _ in range(100):
        nb = rng.integers(1, 7)
        ys = rng.random(nb)
        mass = rng.random(nb) + 0.1
        mass /= mass.sum()
        sides = []
        for _side in range(2):
            pts, w = [], []
            for y, m in zip(ys, mass):
                k = rng.integers(1, 4)
                split = rng.dirichlet(np.ones(k)) * m
                z = sol.fiber_domain.from_unit(rng.random((k, 2)))
                pts.append(np.column_stack([np.full(k, y), z]))
                w.append(split)
            sides.append(EmpiricalMeasure(np.vstack(pts), np.concatenate(w), normalize=True))
        W = wasserstein_discrete(*sides, system=sol)
        Wv = vertical_wasserstein(*sides, system=sol)
        worst = max(worst, W - Wv)
    verdict(2, worst <= 1e-9, f"100 pairs, max (W - W_vert) = {worst:.2e}", t0, 30)


def test_c03_lift_convergence_uniqueness(verdict, sol):
    t0 = time.perf_counter()
    tol = 1e-3
    base = invariant_grid_cloud(expanding_map(2), 10_001)
    res = lift_measure(sol, base, tol)
    rep = check_lift_uniqueness(sol, base, [sol.fiber_domain.center,
                                            sol.fiber_domain.boundary_point()], tol)
    th = res.fit.theta
    ok = (res.converged and res.fit.model == "exponential" and 0.35 <= th <= 0.45
          and rep.max_distance <= 3 * tol)
    verdict(3, ok, f"theta = {th:.4f}, two-section distance = {rep.max_distance:.2e} "
            f"(limit {3 * tol:g})", t0, 120)


def test_c04_negative_control(verdict):
    t0 = time.perf_counter()
    ident = make_system("skew", fiber="identity")
    res = lift_measure(ident, invariant_grid_cloud(expanding_map(2), 1001), 1e-3, n_max=20,
                       section=[0.7])
    ok = (not res.converged) and (not res.shrinking)
    verdict(4, ok, f"identity fibers: converged={res.converged}, shrinking={res.shrinking}, "
            f"reason={res.reason!r}", t0, 30)


def test_c05_doubling_covariance(verdict):
    t0 = time.perf_counter()
    dbl = make_system("doubling")
    tr = correlations(dbl, lambda x: x[:, 0], lambda x: x[:, 0], 10, orbit_length=1_000_000,
                      seed=5)
    exact = 2.0 ** -np.arange(11) / 12
    z = np.abs(tr.cov - exact) / tr.stderr
    x = orbit_series(dbl, 1_000_000, seed=6)[:, 0]
    cov, se = lagged_covariances(x, x, 60)
    s2, _ = green_kubo(cov, se)
    ok = bool(np.all(z <= 3)) and abs(s2 - 0.25) <= 0.01
    verdict(5, ok, f"max |cov - 2^-n/12| / se = {z.max():.2f}, Green-Kubo sigma^2 = {s2:.4f}",
            t0, 60)


def test_c06_spectral_facts(verdict):
    t0 = time.perf_counter()
    op = build_ulam(expanding_map(2), 64)
    rep = invariant_density(op)
    dense = dense_spectrum(op)
    dens_err = float(np.abs(rep.density - 1 / 64).max())
    ok = (abs(rep.leading_eigenvalue - 1) <= 1e-6 and dens_err <= 1e-9
          and abs(rep.second_modulus - 0.5) <= 0.05 and abs(dense[1] - 0.5) <= 0.05)
    verdict(6, ok, f"m=64: lambda_1 = {rep.leading_eigenvalue:.12f}, density err = {dens_err:.1e}, "
            f"|lambda_2| = {rep.second_modulus:.4g} (dense {dense[1]:.4g}; target 0.5 +- 0.05)",
            t0, 10)


def test_c07_pm_density(verdict):
    t0 = time.perf_counter()
    m = 2048
    op = build_ulam(pomeau_manneville(0.3), m)
    h = invariant_density(op).density * m
    sel = slice(1, 64)
    slope = np.polyfit(np.log(op.centers[sel]), np.log(h[sel]), 1)[0]
    verdict(7, abs(slope + 0.3) <= 0.1, f"log-log density slope near 0 = {slope:.4f}", t0, 120)


def test_c08_coboundary(verdict, sol, sol_shrink):
    t0 = time.perf_counter()
    toy = make_system("skew", fiber="linear", contraction=LAM)
    toy_shrink = estimate_shrinking(toy, n_max=30, fibers=16, pairs_per_fiber=16)
    c_toy = build_coboundary(toy, Potential(lambda x: x[:, 1], LIP, 2.0), toy_shrink, 1e-6)
    norm = Potential(lambda x: np.linalg.norm(x[:, 1:], axis=1), LIP, 2.0)
    c_sol = build_coboundary(sol, norm, sol_shrink, 1e-3)
    lifted = lift_measure(sol, invariant_grid_cloud(expanding_map(2), 100_001), 1e-4,
                          shrink=sol_shrink)
    rep = energy_consistency(norm, c_sol, lifted)
    mu = lifted.lifted
    vals = norm(mu.points)
    mc = 3 * float(np.sqrt(mu.weights @ (vals - mu.weights @ vals) ** 2 / len(mu)))
    gap = abs(rep.mu_phi - rep.base_phi_check)
    ok = (c_toy.fiber_oscillation <= 1.1 * c_toy.truncation_bound
          and c_sol.fiber_oscillation <= 1e-3 * 1.1 and gap <= 1e-3 + mc)
    verdict(8, ok, f"toy osc {c_toy.fiber_oscillation:.2e} vs bound {c_toy.truncation_bound:.2e}; "
            f"solenoid osc {c_sol.fiber_oscillation:.2e} (N={c_sol.N}); "
            f"|mu(phi) - mu_check(phi_check)| = {gap:.2e} (limit {1e-3 + mc:.2e})", t0, 120)


def test_c09_exponent_arithmetic(verdict, sol, sol_shrink):
    t0 = time.perf_counter()
    gamma = exponent_arithmetic(1.0, 1.0, 2.0, sol_shrink.fit).alpha
    # |z_1| has a kink, so phi_check is genuinely no better than gamma-Hölder
    phi = Potential(lambda x: np.abs(x[:, 1]), LIP, 2.0)
    cob = build_coboundary(sol, phi, sol_shrink, 1e-6)
    r = 2.0 ** -np.arange(3, 13)
    q = holder_quotients(cob.phi_check, gamma, r, samples=8192)
    q2 = holder_quotients(cob.phi_check, gamma + 0.2, r, samples=8192)
    bounded = q.max() / q.min() <= 2.0
    growth = q2.max() / q2.min()
    ok = bounded and growth >= 10
    verdict(9, ok, f"gamma = {gamma:.4f}: quotient range {q.min():.2f}..{q.max():.2f} "
            f"(bounded={bounded}); at gamma+0.2 growth {growth:.2f}x (need >= 10x)", t0, 60)


def test_c10_correlation_lift(verdict, sol, sol_shrink):
    t0 = time.perf_counter()
    pairs = [(k, m) for k in (0, 1, 2, 3, 5) for m in (0, 1, 2, 4)]
    f = lambda x: x[:, 1]  # noqa: E731
    g = lambda x: x[:, 1] + np.cos(2 * np.pi * x[:, 0])  # noqa: E731
    rows = correlation_lift_bound_check(sol, f, g, pairs, sol_shrink, hol_f=2.0,
                                        orbit_length=200_000, n_transfer=8, seed=10)
    worst = min(r.slack / r.se if r.se > 0 else np.inf for r in rows)
    ok = len(rows) == 20 and all(r.holds for r in rows)
    verdict(10, ok, f"{len(rows)} (k,m) pairs, min slack / se = {worst:.2f} (limit -3)", t0, 120)


def test_c11_clt(verdict, sol):
    t0 = time.perf_counter()
    base_mu = invariant_grid_cloud(expanding_map(2), 10_001)
    lifted = lift_measure(sol, base_mu, 1e-4)
    f = lambda x: x[:, 0]  # noqa: E731
    rep = clt_diagnostic(sol, lifted, f, n_block=10_000, samples=1000, seed=11)
    dbl = make_system("doubling")
    xb = orbit_series(dbl, 1_000_000, seed=12)[:, 0]
    s_base, _ = green_kubo(*lagged_covariances(xb, xb, 60))
    rel = abs(math.sqrt(rep.sigma2) / math.sqrt(s_base) - 1)
    ok = rep.ks_statistic < 0.05 and rel <= 0.05
    verdict(11, ok, f"KS = {rep.ks_statistic:.4f}; Green-Kubo sigma lifted {math.sqrt(rep.sigma2):.4f}"
            f" vs base {math.sqrt(s_base):.4f} ({100 * rel:.1f}%)", t0, 180)


def test_c12_disintegration_cross_check(verdict, sol):
    t0 = time.perf_counter()
    m = 64
    lifted = lift_measure(sol, invariant_grid_cloud(expanding_map(2), 100_001), 1e-4).lifted
    dis = disintegrate(lifted, m)
    worst = 0.0
    for j in (1, 2):
        f = lambda x, j=j: x[:, j]  # noqa: E731
        binned = dis.conditional_means(f)
        td = disintegration_via_transfer(sol, f, 10, m)
        worst = max(worst, float(np.nanmax(np.abs(binned - td.values))))
    verdict(12, worst <= 0.02, f"sup over {m} cells |binned - transfer| = {worst:.2e} "
            "(f = z_1, z_2)", t0, 120)


def test_c13_attractor_nesting(verdict, sol):
    t0 = time.perf_counter()
    r = render_attractor(sol, n_iter=8, size=256)
    viol = r.nesting_violations()
    ok = all(v == 0 for v in viol) and r.final.any()
    verdict(13, ok, f"pixels outside 1-pixel dilation per step: {viol}", t0, 60)


DET_CONFIGS = {
    "ulam": "[system]\nname = pm\nq = 0.3\n[pipeline]\nname = ulam\n"
            "[numeric]\nm = 256\nconstruction = monte_carlo\nsamples = 200\nseed = 3\n",
    "uniqueness": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = uniqueness\n"
                  "[numeric]\natoms = 2001\nsections = center; rim; 0.3,-0.2\n",
    "corr": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = corr\n[numeric]\n"
            "seed = 7\nobservable = z1\nobservable2 = y\norbit_length = 50000\n",
    "coboundary": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = coboundary\n"
                  "[numeric]\nseed = 7\npotential = norm_z\ntarget_osc = 1e-3\natoms = 2001\n",
    "wasserstein": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = wasserstein\n"
                   "[numeric]\nseed = 7\natoms = 300\n",
    "stable-leaf": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = stable-leaf\n"
                   "[numeric]\nseed = 7\natoms = 1001\nn_max = 8\n",
    "clt": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = clt\n[numeric]\n"
           "seed = 7\natoms = 1001\nn_block = 500\nsamples = 200\norbit_length = 50000\n",
    "attractor": "[system]\nname = solenoid\nlam = 0.4\n[pipeline]\nname = attractor\n"
                 "[numeric]\nn_iter = 4\nimage_size = 64\n",
}


def test_c14_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    diffs, compared = [], 0
    for name, text in DET_CONFIGS.items():
        cfg = tmp_path / f"{name}.ini"
        cfg.write_text(text)
        outs = []
        for threads in (1, 8):
            out = tmp_path / f"{name}_{threads}"
            code = cli.main(["--config", str(cfg), "--out", str(out), "--threads", str(threads)])
            assert code in (0, 2), f"{name} crashed with exit {code}"
            outs.append(out)
        a, b = outs
        files = sorted(p.name for p in a.iterdir() if p.name != "timings.json")
        if files != sorted(p.name for p in b.iterdir() if p.name != "timings.json"):
            diffs.append(f"{name}: file sets differ")
            continue
        for fn in files:
            compared += 1
            if (a / fn).read_bytes() != (b / fn).read_bytes():
                diffs.append(f"{name}/{fn}")
    verdict(14, not diffs, f"{len(DET_CONFIGS)} pipelines, {compared} files byte-compared at "
            f"1 vs 8 threads; differing: {diffs or 'none'}", t0)
