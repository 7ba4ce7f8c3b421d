import math

import numpy as np
import pytest

from fiberlift.errors import ParameterError
from fiberlift.lifting import check_lift_uniqueness, lift_measure, stable_leaf_experiment
from fiberlift.measures import EmpiricalMeasure, invariant_grid_cloud, push_T
from fiberlift.systems import estimate_shrinking, expanding_map, make_system, solenoid_system
from fiberlift.transport import vertical_wasserstein

TOL = 1e-3


@pytest.fixture(scope="module")
def sol():
    return solenoid_system(0.4)


@pytest.fixture(scope="module")
def base():
    return invariant_grid_cloud(expanding_map(2), 2001)


@pytest.fixture(scope="module")
def lifted(sol, base):
    return lift_measure(sol, base, TOL)


def test_lift_converges_at_fiber_rate(lifted):
    assert lifted.converged
    assert lifted.mode == "atoms"
    assert lifted.fit.model == "exponential"
    assert lifted.fit.theta == pytest.approx(0.4, abs=0.05)
    assert lifted.cauchy_trace[-1, 1] < TOL
    assert lifted.invariance_defect < 1e-12


def test_lift_trace_below_envelope(lifted):
    # W(nu_n, nu_{n+1}) <= a_n, with a_n = lam^n in the normalized metric
    n, d = lifted.cauchy_trace.T
    assert np.all(d <= 0.4 ** n * (1 + 1e-9))


def test_identity_fibers_flagged(base):
    ident = make_system("skew", fiber="identity")
    res = lift_measure(ident, base, TOL, n_max=10, section=[0.7])
    assert not res.converged
    assert not res.shrinking
    assert res.reason == "fiber maps not shrinking"


def test_dirac_at_fixed_point_lifts_to_fixed_point():
    lin = make_system("skew", fiber="linear", contraction=0.5)
    res = lift_measure(lin, EmpiricalMeasure(np.array([0.0]), space="base"), 1e-6,
                       section=[0.8])
    assert res.converged
    # distance to the fixed point is below tol in the normalized metric
    assert lin.metric_X(res.lifted.points, np.array([[0.0, 0.0]]))[0] < 1e-6


def test_lift_rejects_bad_input(sol, base):
    with pytest.raises(ParameterError):
        lift_measure(sol, base, tol=0.0)
    with pytest.raises(ParameterError):
        lift_measure(sol, EmpiricalMeasure(np.zeros((3, 3))), TOL)


def test_uniqueness_two_sections(sol, base):
    rep = check_lift_uniqueness(sol, base, [sol.fiber_domain.center,
                                            sol.fiber_domain.boundary_point()], TOL)
    assert rep.unique
    assert rep.max_distance < 3 * TOL
    # iteration count from the contraction bound a_n = lam^n
    bound = math.ceil(math.log(TOL / 2) / math.log(0.4))
    assert all(r.iterations <= bound + 1 for r in rep.results)


def test_uniqueness_identical_sections(sol, base):
    c = sol.fiber_domain.center
    rep = check_lift_uniqueness(sol, base, [c, c], TOL)
    assert rep.max_distance == 0.0


def test_uniqueness_fails_for_isometric_fibers(base):
    ident = make_system("skew", fiber="identity")
    rep = check_lift_uniqueness(ident, base, [[0.0], [1.0]], TOL, n_max=10)
    assert not rep.unique
    assert rep.max_distance == pytest.approx(0.5, abs=1e-12)


def test_uniqueness_deterministic_across_threads(sol, base):
    secs = [sol.fiber_domain.center, sol.fiber_domain.boundary_point(), [0.3, -0.2]]
    a = check_lift_uniqueness(sol, base, secs, TOL, threads=1)
    b = check_lift_uniqueness(sol, base, secs, TOL, threads=4)
    assert np.array_equal(a.distances, b.distances)


def test_stable_leaf_below_envelope(sol, base, lifted):
    r = np.random.default_rng(3)
    pts = np.column_stack([base.base_coords, sol.fiber_domain.from_unit(r.random((len(base), 2)))])
    nu = EmpiricalMeasure(pts)
    res = stable_leaf_experiment(sol, nu, lifted, n_max=12)
    assert res.exact_vertical
    shrink = estimate_shrinking(sol, n_max=30, fibers=16, pairs_per_fiber=16)
    env = shrink.envelope(res.distances[:, 0].astype(int))
    # the reference is itself within tol of the true lift
    assert np.all(res.distances[:, 1] <= env + 2 * TOL)
    assert res.fit.model == "exponential" and res.fit.theta < 0.7


def test_stable_leaf_from_lift_is_flat(sol, lifted):
    res = stable_leaf_experiment(sol, lifted.lifted, lifted, n_max=5)
    assert np.all(res.distances[:, 1] < 2 * TOL)


def test_lifted_is_nearly_invariant(sol, lifted):
    pushed = push_T(sol, lifted.lifted)
    assert vertical_wasserstein(lifted.lifted, pushed, system=sol) < TOL
