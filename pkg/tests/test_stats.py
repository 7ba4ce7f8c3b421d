from fractions import Fraction

import numpy as np
import pytest

from fiberlift.decay import fit_decay, noise_floor
from fiberlift.measures import EmpiricalMeasure, invariant_grid_cloud
from fiberlift.stats import (clt_diagnostic, correlation_lift_bound_check, correlations,
                             green_kubo, lagged_covariances)
from fiberlift.systems import estimate_shrinking, make_system, solenoid_system


def doubling_cov_exact(n):
    """``int (2^n y mod 1) y dy - 1/4`` summed exactly over the 2^n linear pieces."""
    K = 2 ** n
    total = Fraction(0)
    for k in range(K):
        a, b = Fraction(k, K), Fraction(k + 1, K)
        # integral of (K y - k) y over [a, b]
        total += Fraction(K, 3) * (b ** 3 - a ** 3) - Fraction(k, 2) * (b ** 2 - a ** 2)
    return total - Fraction(1, 4)


@pytest.mark.parametrize("n", range(0, 9))
def test_closed_form_oracle(n):
    assert doubling_cov_exact(n) == Fraction(1, 12 * 2 ** n)


@pytest.fixture(scope="module")
def doubling():
    return make_system("doubling")


def test_orbit_covariances_doubling(doubling, backend):
    tr = correlations(doubling, lambda x: x[:, 0], lambda x: x[:, 0], 10,
                      orbit_length=300_000, seed=3)
    exact = np.array([float(doubling_cov_exact(n)) for n in range(11)])
    assert np.all(np.abs(tr.cov - exact) <= 3 * tr.stderr + 1e-12)


def test_operator_estimator_rate(doubling):
    tr = correlations(doubling, lambda x: x[:, 0], lambda x: x[:, 0], 15, estimator="operator",
                      m=1023)
    assert tr.fit.theta == pytest.approx(0.5, abs=0.02)


def test_constant_observable_zero_correlation(doubling):
    tr = correlations(doubling, lambda x: np.full(len(x), 2.0), lambda x: x[:, 0], 5,
                      orbit_length=10_000)
    assert np.all(tr.cov == 0.0)
    assert tr.fit.reason == "exact collapse"


def test_solenoid_correlations_decay():
    sol = solenoid_system(0.4)
    f = lambda x: x[:, 1] + np.cos(2 * np.pi * x[:, 0])  # noqa: E731
    g = lambda x: x[:, 1] + x[:, 0]  # noqa: E731
    tr = correlations(sol, f, g, 12, orbit_length=400_000, seed=1)
    assert tr.fit.model == "exponential" and tr.fit.theta <= 0.7


@pytest.fixture(scope="module")
def lift_setup():
    sol = solenoid_system(0.4)
    shrink = estimate_shrinking(sol, n_max=30, fibers=16, pairs_per_fiber=16)
    return sol, shrink


def test_lift_bound_k0_and_shrink_term(lift_setup):
    sol, shrink = lift_setup
    f = lambda x: x[:, 1]  # noqa: E731
    g = lambda x: x[:, 1] + x[:, 0]  # noqa: E731
    rows = correlation_lift_bound_check(sol, f, g, [(0, 1), (0, 3), (2, 1), (4, 2)], shrink,
                                        hol_f=2.0, orbit_length=100_000, n_transfer=8, seed=2)
    g_abs = None
    for r in rows:
        assert r.holds
        if g_abs is None:
            g_abs = r.shrink_term / (2.0 * shrink.envelope([r.k])[0])
        # Lipschitz modulus: second term is H * a_k * |g|_1
        assert r.shrink_term == pytest.approx(2.0 * shrink.envelope([r.k])[0] * g_abs, rel=1e-12)
    # a_k is a sampled lower envelope of the exact lam^k
    assert 0.85 * 0.4 ** 3 <= shrink.envelope([3])[0] <= 0.4 ** 3 * (1 + 1e-9)


def test_lift_bound_zero_observable(lift_setup):
    sol, shrink = lift_setup
    rows = correlation_lift_bound_check(sol, lambda x: x[:, 1], lambda x: np.zeros(len(x)),
                                        [(0, 1), (1, 2)], shrink, hol_f=2.0,
                                        orbit_length=20_000, n_transfer=6)
    for r in rows:
        assert r.lhs == 0.0 and r.rhs == 0.0


def test_green_kubo_doubling(doubling):
    from fiberlift.stats import orbit_series

    x = orbit_series(doubling, 400_000, seed=9)[:, 0]
    cov, se = lagged_covariances(x, x, 60)
    s2, used = green_kubo(cov, se)
    assert s2 == pytest.approx(0.25, abs=0.01)
    assert used >= 5


def test_clt_constant_degenerate(doubling):
    mu = EmpiricalMeasure(np.random.default_rng(0).random(100), space="base")
    rep = clt_diagnostic(doubling, mu, lambda x: np.ones(len(x)), n_block=200, samples=50,
                         orbit_length=5_000)
    assert rep.degenerate and rep.sigma2 == 0.0


def test_clt_doubling_small(doubling):
    # grid atoms integrate y exactly; a random cloud's O(N^-1/2) mean error
    # would be amplified by sqrt(n_block) in the normalized sums
    mu = invariant_grid_cloud(doubling.base, 1001)
    rep = clt_diagnostic(doubling, mu, lambda x: x[:, 0], n_block=2_000, samples=400,
                         sigma2=0.25, seed=4)
    assert rep.ks_statistic < 0.1
    assert rep.mean == pytest.approx((len(mu) - 1) / (2 * len(mu)), abs=1e-12)


# ---------------------------------------------------------------------------
# decay fits


def test_fit_exact_exponential():
    n = np.arange(0, 20)
    fit = fit_decay(np.column_stack([n, 3 * 0.5 ** n]))
    assert fit.model == "exponential"
    assert fit.rate == pytest.approx(0.5, abs=1e-9) and fit.C == pytest.approx(3, abs=1e-9)


def test_fit_exact_polynomial():
    n = np.arange(1, 40)
    fit = fit_decay(np.column_stack([n, 7.0 / n ** 2]))
    assert fit.model == "polynomial"
    assert fit.rate == pytest.approx(2, abs=1e-9) and fit.C == pytest.approx(7, abs=1e-9)


def test_fit_noisy_covariance():
    n = np.arange(0, 16)
    noise = 1e-9 * np.random.default_rng(1).standard_normal(n.size)
    fit = fit_decay(np.column_stack([n, 2.0 ** -n / 12 + noise]))
    assert fit.model == "exponential" and 0.48 <= fit.theta <= 0.52


def test_fit_non_decaying():
    n = np.arange(0, 20)
    fit = fit_decay(np.column_stack([n, np.ones(20)]))
    assert not fit.decays and fit.reason == "non-decaying"


def test_fit_collapse():
    fit = fit_decay(np.column_stack([np.arange(5), [1.0, 0, 0, 0, 0]]))
    assert fit.reason == "exact collapse"


def test_noise_floor_detected():
    n = np.arange(0, 30)
    v = 0.4 ** n + 1e-6
    fit = fit_decay(np.column_stack([n, v]))
    assert fit.model == "exponential" and fit.theta == pytest.approx(0.4, abs=0.02)
    assert fit.floor > 0
    assert noise_floor(v) > 0
