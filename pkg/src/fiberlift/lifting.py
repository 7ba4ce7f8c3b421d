"""Lifting an S-invariant base measure to a T-invariant measure on X.

The lift is the limit of ``T^n_* sigma_* mu_check``; successive iterates are
compared in the vertical Wasserstein distance, which contracts at the fiber
shrinking rate.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._util import keyed_rng, pmap
from .decay import fit_decay
from .errors import ParameterError, PreconditionError
from .measures import EmpiricalMeasure, push_T, section_measure
from .systems import estimate_shrinking
from .transport import vertical_wasserstein, wasserstein_1d, wasserstein_discrete

log = logging.getLogger(__name__)


@dataclass
class LiftResult:
    """Outcome of :func:`lift_measure`.

    ``cauchy_trace`` rows are ``(n, W^{mu_check}(nu_n, nu_{n+1}))``.
    ``converged`` is False whenever the fiber maps were not seen to shrink,
    even if the trace reached the tolerance.
    """

    lifted: EmpiricalMeasure
    iterations: int
    cauchy_trace: np.ndarray
    fit: object
    converged: bool
    shrinking: bool
    invariance_defect: float
    mode: str
    tol: float
    shrink: object = None
    intermediates: list = field(default_factory=list, repr=False)
    warnings: list = field(default_factory=list)
    reason: str = ""

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "shrinking": self.shrinking,
            "invariance_defect": self.invariance_defect,
            "mode": self.mode,
            "tol": self.tol,
            "cauchy_trace": self.cauchy_trace.tolist(),
            "fit": self.fit.to_dict(),
            "warnings": list(self.warnings),
            "reason": self.reason,
            "n_atoms": len(self.lifted),
        }


def base_invariance_defect(sys, base_mu):
    """``W1(S_* mu_check, mu_check)`` on the circle."""
    pushed = EmpiricalMeasure(sys.apply_S(base_mu.base_coords), base_mu.weights, space="base")
    return wasserstein_1d(pushed, base_mu, circle=True)


def lift_measure(sys, base_mu, tol=1e-3, n_max=50, *, n_cells=None, section=None,
                 keep_intermediates=False, shrink=None, tau_marg=1e-9, seed=0):
    """Iterate ``nu_{n+1} = T_* nu_n`` from ``nu_0 = sigma_* base_mu``.

    Parameters
    ----------
    sys : FiberedSystem
    base_mu : EmpiricalMeasure
        Atoms on ``Y``; should be (close to) ``S``-invariant.
    tol : float
        Stop once ``W^{mu_check}(nu_n, nu_{n+1}) < tol``.
    n_cells : int or None
        ``None`` compares iterates by exact atom grouping, which needs the
        base cloud to be invariant as a point set (e.g. ``{i / M}`` under
        doubling).  Otherwise the base is binned; when the binned marginals
        disagree by more than ``tau_marg`` cells are rebalanced and a warning
        is recorded.
    section : array_like or callable, optional
        Fiber point or map ``y -> X`` replacing the system section.
    shrink : ShrinkEstimate, optional
        Skip the sampled shrinking pre-check by passing one.

    Returns
    -------
    LiftResult
    """
    if tol <= 0 or n_max < 1:
        raise ParameterError("lift_measure needs tol > 0 and n_max >= 1")
    if base_mu.dim != 1:
        raise ParameterError("base_mu must be a measure on Y (one column)")
    if shrink is None:
        shrink = estimate_shrinking(sys, n_max=30, fibers=16, pairs_per_fiber=16, seed=seed)
    warnings = []
    if not shrink.shrinking:
        warnings.append(f"fiber maps not shrinking ({shrink.fit.reason}); the lift need not exist")
        log.warning("%s: %s", sys.name, warnings[-1])
    defect = base_invariance_defect(sys, base_mu)
    nu = section_measure(sys, base_mu, section)
    trace, inter = [], [nu] if keep_intermediates else []
    mode = "atoms" if n_cells is None else "binned"
    converged = False
    degenerate = False
    distinct0 = np.unique(base_mu.base_coords).size
    n = 0
    for n in range(n_max):
        nxt = push_T(sys, nu)
        if np.unique(nxt.base_coords).size < 0.5 * distinct0:
            # floating-point expanding maps shed a bit per step; a generic
            # cloud eventually collapses onto a few dyadic points
            degenerate = True
            break
        d = _vertical(sys, nu, nxt, mode, n_cells, tau_marg, warnings)
        if d[1] != mode:
            mode = d[1]
        trace.append((n, d[0]))
        nu = nxt
        if keep_intermediates:
            inter.append(nu)
        if d[0] < tol:
            converged = True
            break
    trace = np.asarray(trace, dtype=float).reshape(-1, 2)
    fit = fit_decay(trace)
    reason = ""
    if degenerate:
        reason = f"base atoms collapsed under floating-point iteration at step {n + 1}"
        warnings.append(reason)
    elif not converged:
        reason = f"tolerance {tol:g} not reached in {n_max} iterations"
    if not shrink.shrinking:
        converged = False
        reason = "fiber maps not shrinking"
    return LiftResult(nu, n + 1, trace, fit, converged, shrink.shrinking, defect, mode, tol,
                      shrink, inter, warnings, reason)


def _vertical(sys, a, b, mode, n_cells, tau_marg, warnings):
    if mode == "atoms":
        try:
            return vertical_wasserstein(a, b, None, system=sys, tau_marg=tau_marg), "atoms"
        except PreconditionError as exc:
            warnings.append(f"atom grouping failed ({exc}); switching to binned mode")
            n_cells = int(math.ceil(math.sqrt(len(a))))
    n_cells = n_cells or int(math.ceil(math.sqrt(len(a))))
    rep = vertical_wasserstein(a, b, n_cells, system=sys, tau_marg=tau_marg, rebalance=True,
                               full_output=True)
    if (rep.rebalanced_mass > 0 or rep.empty_mismatch) and \
            not any(w.startswith("binned W") for w in warnings):
        warnings.append(f"binned W: rebalanced mass {rep.rebalanced_mass:.3g}, "
                        f"{rep.empty_mismatch} one-sided cells")
    return rep.value, "binned"


@dataclass
class UniquenessReport:
    distances: np.ndarray
    tol: float
    results: list = field(repr=False, default_factory=list)
    metric: str = "vertical W (upper bound on W1)"

    @property
    def max_distance(self):
        return float(self.distances.max()) if self.distances.size else 0.0

    @property
    def unique(self):
        return self.max_distance < 3 * self.tol


def check_lift_uniqueness(sys, base_mu, sections, tol=1e-3, n_max=50, threads=None, seed=0):
    """Lift from several sections and compare the results pairwise.

    Distances are vertical Wasserstein distances between lifts sharing the
    base atoms; each bounds the unconstrained W1 from above.
    """
    if len(sections) < 2:
        raise ParameterError("need at least two sections")
    shrink = estimate_shrinking(sys, n_max=30, fibers=16, pairs_per_fiber=16, seed=seed)
    runs = pmap(lambda s: lift_measure(sys, base_mu, tol, n_max, section=s, shrink=shrink,
                                       seed=seed), sections, threads)
    k = len(runs)
    D = np.zeros((k, k))
    for i, j in itertools.combinations(range(k), 2):
        n_cells = None if runs[i].mode == runs[j].mode == "atoms" else \
            int(math.ceil(math.sqrt(len(base_mu))))
        D[i, j] = D[j, i] = vertical_wasserstein(runs[i].lifted, runs[j].lifted, n_cells,
                                                 system=sys, rebalance=True)
    return UniquenessReport(D, tol, runs)


def _snap_base(mu, grid, tol=1e-6):
    """Move base coordinates onto the nearest reference atom (undoes float drift of ``S``)."""
    y = mu.base_coords
    g = np.concatenate([grid, [grid[0] + 1.0]])
    j = np.clip(np.searchsorted(g, y), 1, g.size - 1)
    left, right = g[j - 1], g[j]
    near = np.where(y - left <= right - y, left, right)
    if np.max(np.abs(near - y)) > tol:
        return mu
    pts = mu.points.copy()
    pts[:, 0] = near % 1.0
    return EmpiricalMeasure(pts, mu.weights, space=mu.space)


@dataclass
class StableLeafResult:
    distances: np.ndarray
    fit: object
    n_atoms: int
    exact_vertical: bool


def stable_leaf_experiment(sys, nu, reference, n_max=15, max_atoms=500, seed=0):
    """``W1(T^n_* nu, mu)`` for ``n = 0..n_max`` against a lifted measure.

    When ``nu`` and the lift share base atoms (after the same pushes), the
    exact vertical distance is reported -- it dominates W1 and decays
    without sampling noise.  Otherwise both clouds are subsampled to
    ``max_atoms`` and compared with exact unconstrained transport, which has
    a sampling floor of order ``max_atoms ** (-1 / dim)``.
    """
    mu = reference.lifted if hasattr(reference, "lifted") else reference
    shared = len(nu) == len(mu) and np.allclose(np.sort(nu.base_coords), np.sort(mu.base_coords),
                                                atol=1e-9, rtol=0)
    ref = mu if shared else mu.subsample(max_atoms, seed=seed)
    grid = np.unique(mu.base_coords) if shared else None
    idx = None
    if not shared and len(nu) > max_atoms:
        idx = np.sort(keyed_rng(seed, 51).choice(len(nu), size=max_atoms, replace=False,
                                                  p=nu.weights))
    out = []
    cur = nu
    for n in range(n_max + 1):
        if shared:
            d = vertical_wasserstein(cur, ref, None, system=sys, rebalance=True)
        else:
            sub = cur if idx is None else EmpiricalMeasure(cur.points[idx], space="total")
            d = wasserstein_discrete(sub, ref, system=sys)
        out.append((n, d))
        cur = push_T(sys, cur)
        if shared:
            cur = _snap_base(cur, grid)
    arr = np.asarray(out)
    return StableLeafResult(arr, fit_decay(arr), len(ref), shared)
