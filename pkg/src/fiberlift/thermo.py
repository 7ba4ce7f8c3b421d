"""Potentials, the fiber-constant coboundary correction and weighted transfer operators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import zeta

from ._util import keyed_rng
from .errors import (CapabilityError, ConvergenceError, InfeasibleError, ParameterError,
                     PreconditionError)
from .measures import EmpiricalMeasure, GridMeasure, cell_index
from .systems import ModulusClass

_HORIZON = 200_000


@dataclass
class Potential:
    """Observable ``phi: X -> R`` with a modulus of continuity.

    ``hol_constant`` is the smallest ``H`` with ``|phi(x) - phi(x')| <=
    H omega(d(x, x'))``; when omitted, :meth:`estimate_constant` gives a
    sampled lower bound.
    """

    fn: Callable
    modulus: ModulusClass
    hol_constant: Optional[float] = None

    def __call__(self, x):
        return np.asarray(self.fn(x), dtype=float)

    def estimate_constant(self, sys, samples=20_000, seed=0):
        rng = keyed_rng(seed, 71)
        x = sys.sample_X(rng, samples)
        x2 = sys.sample_X(rng, samples)
        # half the pairs are nearby, where Hölder quotients peak
        near = x + 1e-3 * (rng.random(x.shape) - 0.5)
        near[:, 0] %= 1.0
        if sys.dim_fiber:
            near[:, 1:] = sys.fiber_domain.clip(near[:, 1:])
        x2[: samples // 2] = near[: samples // 2]
        d = sys.metric_X(x, x2)
        ok = d > 0
        q = np.abs(self(x) - self(x2))[ok] / self.modulus(d[ok])
        return float(q.max())

    def constant(self, sys):
        return self.hol_constant if self.hol_constant is not None else self.estimate_constant(sys)


# ---------------------------------------------------------------------------
# tails of sum_n omega(a_n)


def modulus_tail(fit, modulus, N):
    """``sum_{n > N} omega(a_n)`` with ``a_n`` the fitted shrinking model.

    Raises ``InfeasibleError`` when the series diverges.
    """
    if fit.model == "none":
        if fit.reason == "exact collapse":
            return 0.0
        raise InfeasibleError(f"fiber shrinking not established ({fit.reason})")
    a = modulus.alpha
    if fit.model == "exponential":
        th, C = fit.rate, fit.C
        if modulus.kind == "holder":
            r = th ** a
            return C ** a * r ** (N + 1) / (1.0 - r)
        if a <= 1.0:
            raise InfeasibleError(f"log-Hölder exponent {a} <= 1 with exponential shrinking: "
                                  "sum of omega(a_n) diverges")
        # omega(C th^n) ~ (n log(1/th))^-a: sum a long head, bound the rest by an integral
        n = np.arange(N + 1, N + 1 + _HORIZON, dtype=float)
        head = float(np.sum(modulus(np.minimum(C * th ** n, 1.0))))
        end = N + 1 + _HORIZON
        return head + math.log(1.0 / th) ** (-a) * (end - 1) ** (1 - a) / (a - 1)
    d, C = fit.rate, fit.C
    if modulus.kind == "holder":
        if a * d <= 1.0:
            raise InfeasibleError(f"alpha * degree = {a * d:.4g} <= 1: sum of omega(a_n) diverges")
        return C ** a * float(zeta(a * d, N + 1))
    raise InfeasibleError("log-Hölder potentials with polynomial shrinking: "
                          "sum of omega(a_n) diverges")


def minimal_truncation(fit, modulus, hol, target, n_cap=1_000_000):
    """Smallest ``N`` with ``2 H sum_{n > N} omega(a_n) <= target``."""
    if target <= 0:
        raise ParameterError("target oscillation must be positive")
    lo, hi = 0, 1
    while 2 * hol * modulus_tail(fit, modulus, hi) > target:
        lo, hi = hi, hi * 2
        if hi > n_cap:
            raise InfeasibleError(f"no truncation below {n_cap} reaches oscillation {target:g}")
    if 2 * hol * modulus_tail(fit, modulus, 0) <= target:
        return 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if 2 * hol * modulus_tail(fit, modulus, mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# coboundary


@dataclass
class CoboundaryResult:
    """``phi_hat = phi + h_N - h_N o T`` and its base reduction ``phi_check``."""

    sys: object = field(repr=False)
    phi: Potential = field(repr=False)
    N: int
    hol_constant: float
    truncation_bound: float
    fiber_oscillation: float
    target: float
    shrink_fit: object = None

    def h(self, x):
        """``h_N(x) = sum_{n <= N} phi(T^n sigma pi x) - phi(T^n x)``."""
        x = np.asarray(x, dtype=float).reshape(-1, self.sys.dim)
        xs = self.sys.section(self.sys.project(x))
        acc = np.zeros(x.shape[0])
        for _ in range(self.N + 1):
            acc += self.phi(xs) - self.phi(x)
            x = self.sys.apply_T(x)
            xs = self.sys.apply_T(xs)
        return acc

    def phi_hat(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.sys.dim)
        return self.phi(x) + self.h(x) - self.h(self.sys.apply_T(x))

    def phi_check(self, y):
        return self.phi_hat(self.sys.section(np.asarray(y, dtype=float)))

    @property
    def oscillation_ok(self):
        return self.fiber_oscillation <= self.truncation_bound * (1 + 1e-9) + 1e-12

    def to_dict(self):
        return {
            "N": self.N,
            "hol_constant": self.hol_constant,
            "truncation_bound": self.truncation_bound,
            "fiber_oscillation": self.fiber_oscillation,
            "target": self.target,
            "oscillation_ok": self.oscillation_ok,
        }


def fiber_oscillation(sys, f, fibers=64, points=64, seed=0):
    """Max over sampled fibers of ``max f - min f`` along the fiber (rim included)."""
    if not sys.dim_fiber:
        return 0.0
    worst = 0.0
    for i in range(fibers):
        rng = keyed_rng(seed, 72, i)
        y = rng.random()
        z = sys.fiber_domain.from_unit(rng.random((points, sys.dim_fiber)))
        z = np.vstack([z, sys.fiber_domain.rim_points(16)])
        x = np.column_stack([np.full(z.shape[0], y), z])
        v = np.asarray(f(x))
        worst = max(worst, float(v.max() - v.min()))
    return worst


def build_coboundary(sys, phi, shrink, target_osc=1e-6, hol_constant=None, osc_fibers=64,
                     osc_points=64, seed=0):
    """Choose ``N`` from the shrinking fit and build ``h_N``.

    ``N`` is the least integer with ``2 H sum_{n > N} omega(a_n) <= target_osc``
    where ``a_n`` follows the fitted shrinking model.  The resulting
    ``phi_hat`` is checked to be nearly fiber-constant on sampled fibers.
    """
    fit = shrink.fit if hasattr(shrink, "fit") else shrink
    if not (fit.decays or fit.reason == "exact collapse"):
        raise PreconditionError(f"fiber shrinking required, got {fit.model} ({fit.reason})")
    H = hol_constant if hol_constant is not None else phi.constant(sys)
    N = minimal_truncation(fit, phi.modulus, H, target_osc)
    bound = 2 * H * modulus_tail(fit, phi.modulus, N)
    res = CoboundaryResult(sys, phi, N, H, bound, 0.0, target_osc, fit)
    res.fiber_oscillation = fiber_oscillation(sys, res.phi_hat, osc_fibers, osc_points, seed)
    return res


# ---------------------------------------------------------------------------
# modulus bookkeeping


def exponent_arithmetic(alpha, beta, L, shrink_fit, kind="holder"):
    """Modulus class of ``phi_check`` from that of ``phi`` and the shrinking model.

    * exponential ``a_n ~ theta^n`` and Hölder ``alpha``:
      ``gamma = alpha beta / (1 - log L / log theta)`` (Hölder);
    * polynomial ``a_n ~ n^-d`` and Hölder ``alpha > 1/d``:
      log-Hölder with exponent ``alpha d - 1``;
    * exponential and log-Hölder ``alpha > 1``: log-Hölder ``(alpha - 1) / 2``.

    ``beta`` is the Hölder exponent of the section and ``L >= 1`` the
    Lipschitz constant of ``T``.
    """
    if not 0 < beta <= 1:
        raise ParameterError(f"section exponent beta must lie in (0, 1], got {beta}")
    if L < 1:
        raise ParameterError(f"Lipschitz constant must be >= 1, got {L}")
    fit = shrink_fit
    if fit.model == "exponential":
        th = fit.rate
        if kind == "holder":
            if not 0 < alpha <= 1:
                raise ParameterError(f"Hölder exponent must lie in (0, 1], got {alpha}")
            return ModulusClass("holder", alpha * beta / (1.0 - math.log(L) / math.log(th)))
        if kind == "log_holder":
            if alpha <= 1:
                raise InfeasibleError(f"log-Hölder exponent must exceed 1, got {alpha}")
            return ModulusClass("log_holder", (alpha - 1.0) / 2.0)
    elif fit.model == "polynomial":
        d = fit.rate
        if kind == "holder":
            if alpha * d <= 1:
                raise InfeasibleError(f"need alpha > 1/d: alpha={alpha}, d={d:.4g}")
            return ModulusClass("log_holder", alpha * d - 1.0)
        if kind == "log_holder":
            raise InfeasibleError("log-Hölder potentials need exponential shrinking")
    else:
        raise InfeasibleError(f"no shrinking model ({fit.reason})")
    raise ParameterError(f"unknown modulus kind {kind!r}")


def holder_quotients(f, exponent, scales, samples=4096, seed=0):
    """``Q(r) = max_y |f(y + r) - f(y)| / r^exponent`` for circle functions.

    ``y`` runs over a shifted uniform grid of ``samples`` points; a bounded
    ``Q`` across scales is the numerical signature of ``exponent``-Hölder
    regularity.
    """
    scales = np.asarray(scales, dtype=float)
    if np.any(scales <= 0) or exponent <= 0:
        raise ParameterError("scales and exponent must be positive")
    y = (np.arange(samples) + keyed_rng(seed, 73).random()) / samples
    fy = np.asarray(f(y), dtype=float)
    out = np.empty(scales.size)
    for i, r in enumerate(scales):
        out[i] = np.max(np.abs(np.asarray(f((y + r) % 1.0), dtype=float) - fy)) / r ** exponent
    return out


# ---------------------------------------------------------------------------
# weighted transfer operator


@dataclass
class WeightedOperator:
    """Grid discretization of ``L_phi g(y) = sum_{Sz = y} e^{phi(z)} g(z)``.

    ``matrix`` acts on functions sampled at cell centers.  ``eigenvalue`` is
    the leading eigenvalue ``rho``; ``eigenfunction`` (``v``) and
    ``eigenmeasure`` (``nu``, cell masses) are its right/left eigenvectors.
    """

    matrix: sp.csr_matrix
    eigenvalue: float
    eigenfunction: np.ndarray
    eigenmeasure: np.ndarray
    iterations: int

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def pressure(self):
        return math.log(self.eigenvalue)

    def normalized(self):
        """``D_v^{-1} M D_v / rho``: stochastic, fixes constants."""
        v = self.eigenfunction
        Dv = sp.diags(v)
        Dinv = sp.diags(1.0 / v)
        return (Dinv @ self.matrix @ Dv / self.eigenvalue).tocsr()

    def equilibrium(self):
        """Cell masses ``nu_i v_i`` normalized to one."""
        w = self.eigenmeasure * self.eigenfunction
        return GridMeasure(w / w.sum())


def _power(A, x, tol, max_iter):
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = A @ x
        lam_new = float(y.sum() / x.sum())
        y /= y.sum()
        if np.abs(y - x).max() < tol and abs(lam_new - lam) < tol * max(1.0, abs(lam_new)):
            return lam_new, y, it
        x, lam = y, lam_new
    raise ConvergenceError(f"power iteration did not settle in {max_iter} steps (lambda ~ {lam})")


def weighted_transfer(base, phi_check, m, tol=1e-13, max_iter=100_000):
    """Assemble the weighted operator on ``m`` cells and find its leading eigen-triple.

    Row ``j`` collects, for each inverse branch ``z_b`` of the cell center
    ``c_j``, the weight ``exp(phi_check(z_b(c_j)))`` in the column of the
    cell containing ``z_b(c_j)``.
    """
    base = base.base if hasattr(base, "fiber_domain") else base
    if not base.branches:
        raise CapabilityError(f"{base.name} has no branch data")
    c = (np.arange(m) + 0.5) / m
    rows, cols, vals = [], [], []
    for b in base.branches:
        z = b.inv(c)
        rows.append(np.arange(m))
        cols.append(cell_index(z, m))
        vals.append(np.exp(np.asarray(phi_check(z), dtype=float)))
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(m, m)).tocsr()
    rho, v, it1 = _power(M, np.ones(m) / m, tol, max_iter)
    rho2, nu, it2 = _power(M.T.tocsr(), np.ones(m) / m, tol, max_iter)
    v = v / (nu @ v)
    return WeightedOperator(M, rho, v * m, nu, it1 + it2)


# ---------------------------------------------------------------------------
# energy


@dataclass
class EnergyReport:
    mu_phi: float
    mu_phi_hat: float
    base_phi_check: float

    @property
    def hat_gap(self):
        return abs(self.mu_phi - self.mu_phi_hat)

    @property
    def base_gap(self):
        return abs(self.mu_phi_hat - self.base_phi_check)

    def to_dict(self):
        return {"mu_phi": self.mu_phi, "mu_phi_hat": self.mu_phi_hat,
                "base_phi_check": self.base_phi_check, "hat_gap": self.hat_gap,
                "base_gap": self.base_gap}


def energy_consistency(phi, cob, lifted, base_measure=None):
    """Compare ``mu(phi)``, ``mu(phi_hat)`` and ``mu_check(phi_check)``.

    ``lifted`` is a T-invariant cloud (or a ``LiftResult``); ``base_measure``
    defaults to its projection.
    """
    mu = lifted.lifted if hasattr(lifted, "lifted") else lifted
    a = float(mu.weights @ phi(mu.points))
    b = float(mu.weights @ cob.phi_hat(mu.points))
    if base_measure is None:
        base_measure = EmpiricalMeasure(mu.points[:, 0], mu.weights, space="base")
    if isinstance(base_measure, GridMeasure):
        c = base_measure.integrate(cob.phi_check)
    else:
        c = float(base_measure.weights @ cob.phi_check(base_measure.base_coords))
    return EnergyReport(a, b, c)
