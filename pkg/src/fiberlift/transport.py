"""Wasserstein-1 distances: exact discrete OT, 1-D closed forms, vertical W.

The exact solver is a transportation simplex (see ``_kernels.pyx``); the
entropic solver is a log-domain Sinkhorn with epsilon scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _backend
from .errors import ConvergenceError, ParameterError, PreconditionError
from .measures import disintegrate, disintegrate_atoms, group_base_points

MAX_EXACT_ATOMS = 5000


@dataclass
class Coupling:
    """Sparse transport plan as ``(rows, cols, mass)`` triplets."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    shape: tuple
    cost: float
    method: str = "exact"
    info: dict = field(default_factory=dict)

    def dense(self):
        P = np.zeros(self.shape)
        np.add.at(P, (self.rows, self.cols), self.mass)
        return P

    def marginal_error(self, a, b):
        P = self.dense()
        return float(max(np.abs(P.sum(1) - a).max(), np.abs(P.sum(0) - b).max()))


def default_pairwise(x, x2):
    """Max of circle distance on column 0 and Euclidean distance on the rest."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x2.ndim == 1:
        x2 = x2[:, None]
    dy = np.abs(x[:, None, 0] - x2[None, :, 0]) % 1.0
    D = np.minimum(dy, 1.0 - dy)
    if x.shape[1] > 1:
        D = np.maximum(D, np.linalg.norm(x[:, None, 1:] - x2[None, :, 1:], axis=-1))
    return D


def _pairwise(system, metric):
    if metric is not None:
        return metric
    if system is not None:
        return system.pairwise_X
    return default_pairwise


def _rowwise(system, metric):
    """Elementwise distance ``d(x_i, x2_i)`` matching :func:`_pairwise`, or
    ``None`` for a user metric (which only comes in pairwise form)."""
    if metric is not None:
        return None
    if system is not None:
        return system.metric_X

    def d(x, x2):
        x = np.asarray(x, dtype=float).reshape(len(x), -1)
        x2 = np.asarray(x2, dtype=float).reshape(len(x2), -1)
        dy = np.abs(x[:, 0] - x2[:, 0]) % 1.0
        out = np.minimum(dy, 1.0 - dy)
        if x.shape[1] > 1:
            out = np.maximum(out, np.linalg.norm(x[:, 1:] - x2[:, 1:], axis=1))
        return out
    return d


def emd(a, b, C):
    """Exact optimal transport between histograms ``a`` and ``b`` with cost ``C``."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    C = np.ascontiguousarray(C, dtype=float)
    if C.shape != (a.size, b.size):
        raise ParameterError(f"cost shape {C.shape} does not match ({a.size}, {b.size})")
    if abs(a.sum() - b.sum()) > 1e-9:
        raise ParameterError(f"unbalanced marginals: {a.sum()!r} vs {b.sum()!r}")
    rows, cols, flows, cost, iters = _backend.emd(a, b, C)
    return Coupling(np.asarray(rows), np.asarray(cols), np.asarray(flows), C.shape, float(cost),
                    info={"pivots": int(iters), "backend": _backend.BACKEND})


def sinkhorn(a, b, C, eps=1e-4, tol=1e-8, max_iter=20000, eps0=None):
    """Log-domain Sinkhorn with geometric epsilon scaling down to ``eps``.

    Returns the coupling; its ``cost`` is the transport cost of the plan
    (no entropy term).  Raises ``ConvergenceError`` if the final marginal
    violation exceeds ``tol``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    la, lb = np.log(np.maximum(a, 1e-300)), np.log(np.maximum(b, 1e-300))
    f = np.zeros(a.size)
    g = np.zeros(b.size)
    e = eps0 if eps0 is not None else max(float(C.max()), eps)
    used = 0
    while True:
        for _ in range(max_iter):
            used += 1
            f = e * (la - logsumexp((g[None, :] - C) / e, axis=1))
            g = e * (lb - logsumexp((f[:, None] - C) / e, axis=0))
            if used % 10 == 0:
                # column marginals are exact after the g-update
                row = np.exp(logsumexp((f[:, None] + g[None, :] - C) / e, axis=1))
                if np.abs(row - a).max() < (tol if e <= eps else 1e3 * tol):
                    break
        if e <= eps:
            break
        e = max(e * 0.5, eps)
    P = np.exp((f[:, None] + g[None, :] - C) / e)
    viol = float(max(np.abs(P.sum(1) - a).max(), np.abs(P.sum(0) - b).max()))
    if viol > tol:
        raise ConvergenceError(f"sinkhorn marginal violation {viol:.3g} > {tol:g} at eps={e:g}",
                               residual=viol)
    r, c = np.nonzero(P > 0)
    return Coupling(r, c, P[r, c], C.shape, float((P * C).sum()), method="sinkhorn",
                    info={"eps": e, "iterations": used, "marginal_violation": viol})


def wasserstein_discrete(mu, nu, method="exact", *, system=None, metric=None, eps=1e-4,
                         return_coupling=False):
    """W1 between two point clouds under the product metric.

    ``method="exact"`` solves the transport LP (at most 5000 atoms per side);
    ``method="sinkhorn"`` is the entropic approximation.
    """
    if method == "exact" and max(len(mu), len(nu)) > MAX_EXACT_ATOMS:
        raise ParameterError(f"exact transport is limited to {MAX_EXACT_ATOMS} atoms per side; "
                             "subsample or use method='sinkhorn'")
    C = _pairwise(system, metric)(mu.points, nu.points)
    if method == "exact":
        cp = emd(mu.weights, nu.weights, C)
    elif method == "sinkhorn":
        cp = sinkhorn(mu.weights, nu.weights, C, eps=eps)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return (cp.cost, cp) if return_coupling else cp.cost


def wasserstein_1d(mu, nu, circle=False):
    """Closed-form W1 between measures on ``[0, 1]`` or the circle (column 0).

    On the interval this is ``int |F - G|``.  On the circle it is
    ``min_c int |F - G - c|``, attained at a Lebesgue-weighted median of
    ``F - G``.
    """
    x = np.concatenate([mu.points[:, 0], nu.points[:, 0]])
    w = np.concatenate([mu.weights, -nu.weights])
    if circle:
        x = x % 1.0
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    diff = np.cumsum(w)[:-1]  # F - G on [x_i, x_{i+1})
    widths = np.diff(x)
    if not circle:
        return float(np.abs(diff) @ widths)
    # on the circle F - G equals 0 on [0, x_0) and diff[-1] + tail on the last arc
    vals = np.concatenate([[0.0], diff, [0.0]])
    lens = np.concatenate([[x[0]], widths, [1.0 - x[-1]]])
    o = np.argsort(vals, kind="stable")
    cum = np.cumsum(lens[o])
    c = vals[o][np.searchsorted(cum, 0.5 * cum[-1])]
    return float(np.abs(vals - c) @ lens)


# ---------------------------------------------------------------------------
# vertical Wasserstein


@dataclass
class VerticalReport:
    value: float
    mode: str
    n_cells: int
    empty_mismatch: int = 0
    rebalanced_mass: float = 0.0
    max_marginal_gap: float = 0.0
    per_cell: np.ndarray = field(default=None, repr=False)


def _cell_w(P, Q, pairwise):
    if len(P) == 1 and len(Q) == 1:
        return float(pairwise(P.points, Q.points)[0, 0])
    C = pairwise(P.points, Q.points)
    if len(P) == 1:
        return float(C[0] @ Q.weights)
    if len(Q) == 1:
        return float(P.weights @ C[:, 0])
    return emd(P.weights, Q.weights, C).cost


def vertical_wasserstein(mu, nu, n_cells=None, *, system=None, metric=None, tau_marg=1e-9,
                         rebalance=False, match_tol=1e-9, full_output=False):
    """``W^{mu_check}(mu, nu)``: base-weighted average of fiberwise W1.

    Parameters
    ----------
    n_cells : int or None
        ``None`` disintegrates exactly by grouping atoms with equal base
        coordinate (within ``match_tol``).  An integer bins the base into
        that many cells and treats each cell's atoms as one conditional.
    tau_marg : float
        Largest tolerated per-cell gap between the two base marginals.
        Larger gaps raise ``PreconditionError`` unless ``rebalance`` is set,
        in which case ``mu``'s cell masses are used as weights and half the
        total gap is reported as ``rebalanced_mass``.

    Notes
    -----
    A cell with atoms on one side only contributes its mass times the
    fiber diameter (distance 1 in the normalized metric) and is counted in
    ``empty_mismatch``.
    """
    pairwise = _pairwise(system, metric)
    if n_cells is None:
        ys = np.concatenate([mu.base_coords, nu.base_coords])
        labels, reps = group_base_points(ys, match_tol)
        lm, ln = labels[:len(mu)], labels[len(mu):]
        rowwise = _rowwise(system, metric)
        if rowwise is not None:
            fast = _single_atom_cells(mu, nu, lm, ln, reps.size, rowwise, tau_marg, rebalance,
                                      full_output)
            if fast is not None:
                return fast
        from .measures import _build

        A = _build(mu.points, mu.weights, lm, reps.size, reps)
        B = _build(nu.points, nu.weights, ln, reps.size, reps)
        mode = "atoms"
    else:
        A = disintegrate(mu, n_cells)
        B = disintegrate(nu, n_cells)
        mode = "binned"
    gap = np.abs(A.masses - B.masses)
    worst = int(np.argmax(gap))
    if gap[worst] > tau_marg and not rebalance:
        raise PreconditionError(
            f"base marginals differ by {gap[worst]:.3g} in cell {worst} "
            f"(y={A.centers[worst]:.6g}); tau_marg={tau_marg:g}")
    per = np.zeros(A.n_cells)
    empty = 0
    weights = A.masses if rebalance else 0.5 * (A.masses + B.masses)
    for c in range(A.n_cells):
        P, Q = A.conditionals[c], B.conditionals[c]
        if P is None and Q is None:
            continue
        if P is None or Q is None:
            empty += 1
            per[c] = 1.0 if system is not None else _fallback_diam(mu, nu)
            continue
        per[c] = _cell_w(P, Q, pairwise)
    value = float(weights @ per)
    rep = VerticalReport(value, mode, A.n_cells, empty, float(0.5 * gap.sum()) if rebalance else 0.0,
                         float(gap[worst]), per)
    return rep if full_output else value


def _single_atom_cells(mu, nu, lm, ln, n, rowwise, tau_marg, rebalance, full_output):
    """Vectorized path when every base point carries exactly one atom on each side
    (the usual situation for lifts of atomic base measures)."""
    if len(mu) != n or len(nu) != n:
        return None
    cm = np.bincount(lm, minlength=n)
    cn = np.bincount(ln, minlength=n)
    if cm.max() != 1 or cn.max() != 1:
        return None
    ia = np.empty(n, dtype=np.int64)
    ib = np.empty(n, dtype=np.int64)
    ia[lm] = np.arange(n)
    ib[ln] = np.arange(n)
    wa, wb = mu.weights[ia], nu.weights[ib]
    gap = np.abs(wa - wb)
    worst = int(np.argmax(gap))
    if gap[worst] > tau_marg and not rebalance:
        raise PreconditionError(
            f"base marginals differ by {gap[worst]:.3g} in cell {worst} "
            f"(y={mu.points[ia[worst], 0]:.6g}); tau_marg={tau_marg:g}")
    per = rowwise(mu.points[ia], nu.points[ib])
    weights = wa if rebalance else 0.5 * (wa + wb)
    value = float(weights @ per)
    if not full_output:
        return value
    return VerticalReport(value, "atoms", n, 0, float(0.5 * gap.sum()) if rebalance else 0.0,
                          float(gap[worst]), per)


def _fallback_diam(mu, nu):
    pts = np.concatenate([mu.points[:, 1:], nu.points[:, 1:]])
    if pts.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(pts.max(0) - pts.min(0)))


def kantorovich_lower_bound(mu, nu, f):
    """``|mu(f) - nu(f)|`` for a 1-Lipschitz ``f``; never exceeds W1."""
    return abs(float(mu.weights @ f(mu.points)) - float(nu.weights @ f(nu.points)))


def min_over_lipschitz(points, centers, offsets, pairwise=default_pairwise):
    """``min_k (c_k + d(x, p_k))`` -- a 1-Lipschitz piecewise-linear test function."""
    return np.min(offsets[None, :] + pairwise(points, centers), axis=1)


def iterations_for(tol, rate, scale=1.0):
    """Smallest ``n`` with ``scale * rate**n <= tol``."""
    if not 0 < rate < 1:
        raise ParameterError("rate must lie in (0, 1)")
    return max(0, int(math.ceil(math.log(tol / scale) / math.log(rate))))
