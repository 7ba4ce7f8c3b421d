"""Ulam discretization of transfer operators on the circle.

Convention: ``P[i, j]`` is the fraction of cell ``i`` (Lebesgue) that lands
in cell ``j``.  Densities are row vectors pushed by ``p -> p P``; observables
are column vectors pulled back by ``f -> P f`` (Koopman side).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._util import keyed_rng
from .decay import fit_decay
from .errors import CapabilityError, ConvergenceError, ParameterError
from .measures import cell_index


@dataclass
class UlamOperator:
    matrix: sp.csr_matrix
    construction: str
    base_name: str = ""
    info: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def centers(self):
        return (np.arange(self.m) + 0.5) / self.m

    def koopman(self, f):
        return self.matrix @ np.asarray(f, dtype=float)

    def push(self, p):
        """Density (cell masses) after one step."""
        return self.matrix.T @ np.asarray(p, dtype=float)

    def row_sum_error(self):
        return float(np.abs(np.asarray(self.matrix.sum(axis=1)).ravel() - 1.0).max())

    def triplets(self):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


def _as_base(obj):
    return obj.base if hasattr(obj, "fiber_domain") else obj


def build_ulam(base, m, construction="exact", samples=1000, seed=0):
    """Ulam matrix on ``m`` uniform cells.

    ``"exact"`` integrates branch preimages of the cell edges (needs branch
    data); ``"monte_carlo"`` maps ``samples`` uniform points per cell, with
    cell ``i`` drawing from a stream keyed by ``(seed, i)``.
    """
    base = _as_base(base)
    m = int(m)
    if m < 2:
        raise ParameterError("Ulam needs m >= 2 cells")
    if construction == "exact":
        if not base.branches:
            raise CapabilityError(f"{base.name} has no branch data; use construction='monte_carlo'")
        rows, cols, vals = [], [], []
        edges = np.arange(m + 1) / m
        for b in base.branches:
            pts = np.concatenate([edges[(edges >= b.lo) & (edges <= b.hi)], b.inv(edges), [b.lo, b.hi]])
            pts = np.unique(np.clip(pts, b.lo, b.hi))
            lo, hi = pts[:-1], pts[1:]
            keep = hi > lo
            lo, hi = lo[keep], hi[keep]
            mid = 0.5 * (lo + hi)
            rows.append(cell_index(mid, m))
            cols.append(cell_index(np.asarray(b.fwd(mid)) % 1.0, m))
            vals.append((hi - lo) * m)
        P = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(m, m)).tocsr()
        info = {}
    elif construction == "monte_carlo":
        rows, cols = [], []
        for i in range(m):
            y = (i + keyed_rng(seed, 61, i).random(samples)) / m
            rows.append(np.full(samples, i))
            cols.append(cell_index(base(y), m))
        P = sp.coo_matrix((np.full(m * samples, 1.0 / samples),
                           (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)).tocsr()
        info = {"samples": samples, "seed": seed}
    else:
        raise ParameterError(f"unknown construction {construction!r}")
    P.sum_duplicates()
    return UlamOperator(P, construction, base.name, info)


# ---------------------------------------------------------------------------
# spectral data


@dataclass
class SpectralReport:
    """Invariant density and the modulus of the second eigenvalue.

    ``density`` holds cell masses (summing to 1); ``density * m`` is the
    piecewise-constant density.  ``nilpotent`` marks operators whose
    zero-mass part dies in finitely many steps (second modulus 0).
    """

    density: np.ndarray
    leading_eigenvalue: float
    second_modulus: float
    iterations: int
    converged: bool
    nilpotent: bool = False
    restarts: list = field(default_factory=list)

    @property
    def spectral_gap(self):
        return 1.0 - self.second_modulus

    def to_dict(self):
        return {
            "leading_eigenvalue": self.leading_eigenvalue,
            "second_modulus": self.second_modulus,
            "spectral_gap": self.spectral_gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "nilpotent": self.nilpotent,
            "restarts": self.restarts,
        }


def invariant_density(op, tol=1e-12, max_iter=200_000, restarts=3, steps=2000, seed=0):
    """Power iteration for the fixed density, deflated iteration for ``|lambda_2|``.

    Raises ``ConvergenceError`` when the density iteration stalls (e.g. a
    periodic chain).
    """
    PT = op.matrix.T.tocsr()
    m = op.m
    p = np.full(m, 1.0 / m)
    resid = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        q = PT @ p
        q /= q.sum()
        resid = np.abs(q - p).sum()
        p = q
        if resid < tol:
            break
    else:
        raise ConvergenceError(f"invariant density did not converge: L1 step change {resid:.3g} "
                               f"after {max_iter} iterations", residual=resid)
    lead = float((PT @ p).sum() / p.sum())
    rhos, nil = [], False
    for r in range(restarts):
        rho, dead = _second_modulus(PT, p, keyed_rng(seed, 62, r), steps)
        rhos.append(rho)
        nil = nil or dead
    rho = max(rhos)
    return SpectralReport(p, lead, rho, it, True, nilpotent=bool(nil and rho == 0.0), restarts=rhos)


def _second_modulus(PT, p, rng, steps, window=200):
    g = rng.standard_normal(p.size)
    g -= g.sum() * p
    g /= np.linalg.norm(g)
    logs = []
    for _ in range(steps):
        g = PT @ g
        g -= g.sum() * p
        nrm = np.linalg.norm(g)
        if nrm < 1e-14:
            return 0.0, True
        logs.append(np.log(nrm))
        g /= nrm
    tail = np.asarray(logs[-min(window, len(logs)):])
    return float(np.exp(tail.mean())), False


def dense_spectrum(op):
    """Eigenvalue moduli of the dense matrix, descending (cross-check for small m)."""
    ev = np.linalg.eigvals(op.matrix.toarray())
    return np.sort(np.abs(ev))[::-1]


def transfer_mu(op, f, p):
    """``L_mu f = P^T (f h) / h`` with ``h`` the invariant cell masses ``p``."""
    num = op.matrix.T @ (np.asarray(f, dtype=float) * p)
    out = np.zeros_like(num)
    pos = p > 0
    out[pos] = num[pos] / p[pos]
    return out


def operator_decay(op, f, n_max=50, density=None):
    """``sup |L_mu^n f|`` for zero-mean ``f`` (centred against the invariant density).

    ``f`` is a callable on cell centers or an array of cell values.
    """
    if density is None:
        density = invariant_density(op).density
    vals = f(op.centers) if callable(f) else np.asarray(f, dtype=float)
    g = vals - density @ vals
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    out = []
    for n in range(n_max + 1):
        s = float(np.max(np.abs(g[density > 0])))
        # values at roundoff level count as exact zeros
        out.append((n, s if s > 1e-13 * scale else 0.0))
        g = transfer_mu(op, g, density)
    arr = np.asarray(out)
    return arr, fit_decay(arr)


# ---------------------------------------------------------------------------
# disintegration through the transfer operator


@dataclass
class TransferDisintegration:
    """``xi_y(f)`` at grid points via ``L^n (f o T^n o sigma)``."""

    grid: np.ndarray
    values: np.ndarray
    level_diffs: np.ndarray
    n: int

    @property
    def error_proxy(self):
        return float(self.level_diffs[-1]) if self.level_diffs.size else np.inf

    def __call__(self, y):
        """Periodic linear interpolation between grid points."""
        g = np.concatenate([self.grid - 1.0, self.grid, self.grid + 1.0])
        v = np.tile(self.values, 3)
        return np.interp(np.asarray(y, dtype=float) % 1.0, g, v)


def _level(sys, f, grid, n, density, m):
    base = sys.base
    Z = grid[:, None]
    W = np.ones_like(Z)
    for _ in range(n):
        zs, ws = [], []
        hz_prev = density[cell_index(Z, m)]
        for b in base.branches:
            zb = b.inv(Z)
            hz = density[cell_index(zb, m)]
            ratio = np.divide(hz, hz_prev, out=np.zeros_like(hz), where=hz_prev > 0)
            zs.append(zb)
            ws.append(W * ratio / np.abs(b.deriv(zb)))
        Z = np.concatenate(zs, axis=1)
        W = np.concatenate(ws, axis=1)
    x = sys.section(Z.ravel())
    for _ in range(n):
        x = sys.apply_T(x)
    vals = np.asarray(f(x), dtype=float).reshape(Z.shape)
    return (W * vals).sum(1) / W.sum(1)


def disintegration_via_transfer(sys, f, n=10, n_grid=64, op=None, density=None, levels=4):
    """Approximate ``y -> xi_y(f)`` by ``L_mu^n (f o T^n o sigma)`` on a grid.

    The transfer operator is applied exactly on the ``k^n`` branch
    preimages of each grid point, weighted by ``h(z) / (h(y) |(S^n)'(z)|)``
    with ``h`` the invariant density of the Ulam operator ``op``.  The last
    ``levels`` successive differences ``sup |g_n - g_{n-1}|`` are returned
    as an error proxy.
    """
    base = sys.base
    if not base.branches:
        raise CapabilityError(f"{base.name} has no branch data for exact preimages")
    if density is None:
        op = op or build_ulam(base, 256)
        density = invariant_density(op).density
    m = density.size
    grid = (np.arange(n_grid) + 0.5) / n_grid
    vals = {}
    lo = max(0, n - levels)
    for k in range(lo, n + 1):
        vals[k] = _level(sys, f, grid, k, density, m)
    diffs = np.array([np.max(np.abs(vals[k] - vals[k - 1])) for k in range(lo + 1, n + 1)])
    return TransferDisintegration(grid, vals[n], diffs, n)
