"""Discrete measures: weighted point clouds, grid histograms, disintegrations.

Points are rows of an ``(N, k)`` array whose first column is the base
coordinate ``y`` in ``[0, 1)``.  A base measure has ``k == 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._util import keyed_rng
from .errors import DomainViolation, ParameterError

WEIGHT_TOL = 1e-12
DEFAULT_JITTER = 2.0 ** -48


class EmpiricalMeasure:
    """Weighted point cloud with weights summing to one.

    Parameters
    ----------
    points : array_like, shape (N, k) or (N,)
    weights : array_like, shape (N,), optional
        Uniform when omitted.  Must be nonnegative and sum to 1 within 1e-12
        unless ``normalize`` is set.
    space : {"total", "base"}
    """

    __slots__ = ("points", "weights", "space")

    def __init__(self, points, weights=None, space="total", normalize=False):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] == 0:
            raise ParameterError("empty measure")
        if weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
            if w.size != pts.shape[0]:
                raise ParameterError("weights and points differ in length")
            if np.any(w < 0):
                raise ParameterError("negative weight")
            s = w.sum()
            if normalize:
                w = w / s
            elif abs(s - 1.0) > WEIGHT_TOL:
                raise ParameterError(f"weights sum to {s!r}, not 1")
        if space not in ("total", "base"):
            raise ParameterError(f"unknown space tag {space!r}")
        pts.setflags(write=False)
        w.setflags(write=False)
        self.points = pts
        self.weights = w
        self.space = space

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"EmpiricalMeasure(n={len(self)}, dim={self.dim}, space={self.space!r})"

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def base_coords(self):
        return self.points[:, 0]

    def mean(self):
        return self.weights @ self.points

    @classmethod
    def dirac(cls, point, space="total"):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), space=space)

    def subsample(self, n, seed=0):
        """``n`` atoms drawn without replacement (weight-proportional), reweighted uniformly."""
        if n >= len(self):
            return self
        idx = keyed_rng(seed, 41).choice(len(self), size=n, replace=False, p=self.weights)
        idx.sort()
        return EmpiricalMeasure(self.points[idx], space=self.space)


@dataclass(frozen=True)
class GridMeasure:
    """Histogram on the uniform partition of ``[0, 1)`` into ``m`` cells."""

    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if np.any(m < -1e-15) or abs(m.sum() - 1.0) > WEIGHT_TOL:
            raise ParameterError(f"grid masses must be nonnegative and sum to 1 (sum={m.sum()!r})")
        object.__setattr__(self, "masses", m)

    @property
    def m(self):
        return self.masses.size

    @property
    def centers(self):
        return (np.arange(self.m) + 0.5) / self.m

    @property
    def density(self):
        return self.masses * self.m

    def integrate(self, f):
        return float(self.masses @ np.asarray(f(self.centers), dtype=float))

    def as_empirical(self):
        keep = self.masses > 0
        return EmpiricalMeasure(self.centers[keep], self.masses[keep] / self.masses[keep].sum(),
                                space="base")


# ---------------------------------------------------------------------------
# push-forward, integration


def integrate(mu, f):
    """``sum_i w_i f(x_i)`` for a vectorized observable ``f``."""
    vals = np.asarray(f(mu.points), dtype=float).reshape(-1)
    return float(mu.weights @ vals)


def pushforward(mu, fn, space=None, in_domain=None):
    """Image measure: atoms mapped by ``fn``, weights unchanged.

    ``fn`` may return ``(N,)`` (a projection to the base) or ``(N, k)``.
    ``in_domain`` is an optional mask function on the mapped points.
    """
    out = np.asarray(fn(mu.points), dtype=float)
    if out.ndim == 1:
        out = out[:, None]
        space = space or "base"
    if in_domain is not None:
        ok = np.asarray(in_domain(out))
        if not np.all(ok):
            i = int(np.argmin(ok))
            raise DomainViolation(f"atom {i} mapped outside the domain: {out[i].tolist()}",
                                  point=out[i].tolist())
    return EmpiricalMeasure(out, mu.weights, space=space or mu.space)


def push_T(sys, mu, n=1, check=True):
    pts = mu.points
    for step in range(n):
        pts = sys.apply_T(pts)
        if check:
            ok = sys.in_domain(pts)
            if not np.all(ok):
                i = int(np.argmin(ok))
                raise DomainViolation(f"atom {i} left X at step {step + 1}: {pts[i].tolist()}",
                                      point=pts[i].tolist(), step=step + 1)
    return EmpiricalMeasure(pts, mu.weights, space="total")


def project_measure(sys, mu):
    return EmpiricalMeasure(sys.project(mu.points), mu.weights, space="base")


def section_measure(sys, base_mu, point=None):
    """``sigma_* base_mu`` for the system section (or a constant fiber point)."""
    if callable(point):
        pts = point(base_mu.base_coords)
    else:
        pts = sys.section(base_mu.base_coords, point)
    return EmpiricalMeasure(pts, base_mu.weights, space="total")


def uniform_base_cloud(n, seed=0):
    return EmpiricalMeasure(keyed_rng(seed, 42).random(n), space="base")


def uniform_total_cloud(sys, n, seed=0):
    return EmpiricalMeasure(sys.sample_X(keyed_rng(seed, 43), n), space="total")


def invariant_grid_cloud(base, n_atoms):
    """Uniform atoms on ``{i / M}`` with ``M >= n_atoms`` coprime to ``k``.

    ``y -> k y mod 1`` permutes this set, so the cloud is invariant as a
    point cloud (up to float rounding) and discretizes Lebesgue measure.
    """
    k = base.params.get("k") if hasattr(base, "params") else None
    if k is None:
        raise ParameterError("invariant grid clouds exist only for linear expanding maps")
    M = int(n_atoms)
    while math.gcd(M, int(k)) != 1:
        M += 1
    return EmpiricalMeasure(np.arange(M) / M, space="base")


# ---------------------------------------------------------------------------
# orbits


def orbit(sys, x0, n_steps, jitter=0.0, seed=0):
    """Orbit ``x_0, ..., x_n`` of ``T``; shape ``(n + 1, dim)``.

    With ``jitter > 0`` each base step adds a uniform perturbation in
    ``[0, jitter)`` (mod 1).  Expanding maps lose one bit per step in floating
    point, so unjittered orbits of the doubling map collapse to 0 after ~53
    steps; the tiny jitter yields a pseudo-orbit that shadows a typical one.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size == 1 and sys.dim > 1:
        x0 = sys.section([x0[0]])[0]
    noise = (keyed_rng(seed, 44).random(n_steps) * jitter) if jitter > 0 else np.zeros(n_steps)
    out = np.empty((n_steps + 1, sys.dim))
    fast = sys.base.kernel is not None and (sys.dim_fiber == 0 or sys.fiber_affine is not None)
    if fast:
        kind, param = sys.base.kernel
        y = _backend.base_orbit(kind, param, float(x0[0]), noise)
        out[:, 0] = y
        if sys.dim_fiber:
            from scipy.signal import lfilter

            c, g = sys.fiber_affine
            drive = np.asarray(g(y[:-1]), dtype=float).reshape(n_steps, sys.dim_fiber)
            for j in range(sys.dim_fiber):
                u = np.concatenate([[x0[1 + j]], drive[:, j]])
                out[:, 1 + j] = lfilter([1.0], [1.0, -c], u)
    else:
        x = x0[None, :].copy()
        out[0] = x
        for t in range(n_steps):
            x = sys.apply_T(x)
            x[:, 0] = (x[:, 0] + noise[t]) % 1.0
            out[t + 1] = x
    ok = sys.in_domain(out, tol=1e-9)
    if not np.all(ok):
        t = int(np.argmin(ok))
        raise DomainViolation(f"orbit left X at step {t}: {out[t].tolist()}",
                              point=out[t].tolist(), step=t)
    return out


def birkhoff_measure(sys, x0, burn_in, n, jitter=0.0, seed=0):
    """Equal-weight cloud on ``T^{burn_in + 1} x0, ..., T^{burn_in + n} x0``."""
    if n < 1:
        raise ParameterError("birkhoff_measure needs n >= 1")
    path = orbit(sys, x0, burn_in + n, jitter=jitter, seed=seed)
    return EmpiricalMeasure(path[burn_in + 1:], space="total" if sys.dim > 1 else "base")


def birkhoff_sums(sys, starts, n_steps, f, jitter=DEFAULT_JITTER, seed=0):
    """``sum_{t < n_steps} f(x_t)`` for many start points, advanced in lockstep."""
    x = np.array(starts, dtype=float).reshape(-1, sys.dim)
    rng = keyed_rng(seed, 45)
    acc = np.zeros(x.shape[0])
    for _ in range(n_steps):
        acc += np.asarray(f(x), dtype=float)
        x = sys.apply_T(x)
        if jitter > 0:
            x[:, 0] = (x[:, 0] + jitter * rng.random(x.shape[0])) % 1.0
    return acc


# ---------------------------------------------------------------------------
# disintegration


@dataclass
class Disintegration:
    """Atoms of a measure grouped by base cell (or by identical base point).

    ``conditionals[c]`` is ``None`` for empty cells.  ``index[c]`` holds the
    atom indices of cell ``c`` in the original measure.
    """

    centers: np.ndarray
    masses: np.ndarray
    conditionals: list
    index: list
    n_atoms: int
    edges: np.ndarray = field(default=None)

    @property
    def n_cells(self):
        return self.masses.size

    def conditional_means(self, f):
        """``xi_y(f)`` per cell; NaN on empty cells."""
        out = np.full(self.n_cells, np.nan)
        for c, cond in enumerate(self.conditionals):
            if cond is not None:
                out[c] = integrate(cond, f)
        return out

    def reassemble(self):
        pts, w = None, np.empty(self.n_atoms)
        for c, cond in enumerate(self.conditionals):
            if cond is None:
                continue
            if pts is None:
                pts = np.empty((self.n_atoms, cond.dim))
            pts[self.index[c]] = cond.points
            w[self.index[c]] = cond.weights * self.masses[c]
        return EmpiricalMeasure(pts, w, normalize=True)


def _build(points, weights, labels, n_groups, centers, edges=None):
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    bounds = np.searchsorted(sorted_labels, np.arange(n_groups + 1))
    masses = np.zeros(n_groups)
    conds, index = [], []
    for c in range(n_groups):
        idx = order[bounds[c]:bounds[c + 1]]
        index.append(idx)
        if idx.size == 0:
            conds.append(None)
            continue
        w = weights[idx]
        masses[c] = w.sum()
        conds.append(EmpiricalMeasure(points[idx], w / masses[c], normalize=True))
    return Disintegration(centers, masses, conds, index, points.shape[0], edges)


def cell_index(y, n_cells):
    """Left-closed cells ``[i/m, (i+1)/m)``; the last cell is closed at 1."""
    return np.clip(np.floor(np.asarray(y) * n_cells).astype(np.int64), 0, n_cells - 1)


def disintegrate(mu, n_cells=None):
    """Bucket atoms by the base cell of ``pi(atom)`` and renormalize per cell.

    ``n_cells`` defaults to ``ceil(sqrt(N))``.
    """
    if n_cells is None:
        n_cells = int(math.ceil(math.sqrt(len(mu))))
    if n_cells < 1:
        raise ParameterError("n_cells must be >= 1")
    labels = cell_index(mu.base_coords, n_cells)
    centers = (np.arange(n_cells) + 0.5) / n_cells
    edges = np.arange(n_cells + 1) / n_cells
    return _build(mu.points, mu.weights, labels, n_cells, centers, edges)


def group_base_points(ys, tol=1e-9):
    """Cluster base coordinates that agree within ``tol`` (on the circle)."""
    ys = np.asarray(ys, dtype=float) % 1.0
    order = np.argsort(ys, kind="stable")
    s = ys[order]
    new = np.empty(s.size, dtype=bool)
    new[0] = True
    new[1:] = np.diff(s) > tol
    lab_sorted = np.cumsum(new) - 1
    n = int(lab_sorted[-1]) + 1
    # wrap: points near 1 join the group at 0
    if n > 1 and (s[0] + 1.0 - s[-1]) <= tol:
        lab_sorted[lab_sorted == n - 1] = 0
        n -= 1
    labels = np.empty_like(lab_sorted)
    labels[order] = lab_sorted
    reps = np.zeros(n)
    reps[labels] = ys
    return labels, reps


def disintegrate_atoms(mu, tol=1e-9):
    """Exact disintegration of an atomic measure: group atoms with equal ``pi``."""
    labels, reps = group_base_points(mu.base_coords, tol)
    return _build(mu.points, mu.weights, labels, reps.size, reps)
