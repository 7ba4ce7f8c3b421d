"""Fibered systems: extensions ``T`` of circle maps ``S`` through ``pi``.

Phase spaces are products ``Y x Phi`` with ``Y`` the circle ``[0, 1)`` and
``Phi`` a box or a disk.  Points of ``X`` are rows ``(y, z_1, ..., z_k)``.
The metric on ``X`` is ``max(d_circle(y, y'), |z - z'|_2 / diam(Phi))`` so
all distances lie in ``[0, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._util import circle_dist, keyed_rng
from .decay import DecayFit, fit_decay
from .errors import DomainViolation, ParameterError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# base maps


@dataclass(frozen=True)
class Branch:
    """Monotone increasing full branch ``[lo, hi) -> [0, 1)`` of a circle map."""

    lo: float
    hi: float
    fwd: Callable
    inv: Callable
    deriv: Callable


@dataclass(frozen=True)
class BaseMap:
    """Vectorized circle map with optional branch data and a compiled orbit kernel."""

    name: str
    fn: Callable
    branches: tuple = ()
    kernel: Optional[tuple] = None
    lipschitz: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __call__(self, y):
        return self.fn(np.asarray(y, dtype=float))

    def preimages(self, y):
        """All preimages of ``y`` (shape ``(N,)``), returned as ``(N, n_branches)``."""
        y = np.asarray(y, dtype=float)
        return np.stack([b.inv(y) for b in self.branches], axis=-1)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        for b in self.branches:
            sel = (y >= b.lo) & (y < b.hi)
            out[sel] = b.deriv(y[sel])
        return out


def _linear_branches(k):
    out = []
    for j in range(k):
        out.append(Branch(
            j / k, (j + 1) / k,
            (lambda y, j=j: k * y - j),
            (lambda z, j=j: (np.asarray(z) + j) / k),
            (lambda y: np.full_like(np.asarray(y, dtype=float), float(k))),
        ))
    return tuple(out)


def expanding_map(k=2):
    """``y -> k y mod 1``."""
    k = int(k)
    if k < 2:
        raise ParameterError(f"expanding_k needs integer k >= 2, got {k}")
    return BaseMap(
        "doubling" if k == 2 else f"expanding_{k}",
        lambda y: (k * y) % 1.0,
        _linear_branches(k),
        kernel=(0, float(k)),
        lipschitz=float(k),
        params={"k": k},
    )


def doubling_map():
    return expanding_map(2)


def _pm_inverse(z, q, tol=1e-14):
    """Inverse of the neutral branch ``y -> (1 + (2y)^q) y`` on ``[0, 1/2]``."""
    z = np.asarray(z, dtype=float)
    lo = np.zeros_like(z)
    hi = np.full_like(z, 0.5)
    # monotone on [0, 1/2] with image [0, 1]; 60 halvings reach 1e-18
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = (1.0 + (2.0 * mid) ** q) * mid < z
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo < tol):
            break
    return 0.5 * (lo + hi)


def pomeau_manneville(q):
    """Pomeau-Manneville circle map ``S_q``.

    ``(1 + (2y)^q) y`` on ``[0, 1/2]`` (closed, so ``y = 1/2`` uses this
    branch and lands on ``1 = 0``), ``2y - 1`` on ``(1/2, 1)``.
    """
    q = float(q)
    if not 0.0 <= q < 1.0:
        raise ParameterError(f"Pomeau-Manneville parameter q must lie in [0, 1), got {q}")

    def fn(y):
        y = np.asarray(y, dtype=float) % 1.0
        first = (1.0 + (2.0 * y) ** q) * y
        return np.where(y <= 0.5, first, 2.0 * y - 1.0) % 1.0

    branches = (
        Branch(0.0, 0.5,
               lambda y: (1.0 + (2.0 * y) ** q) * y,
               lambda z: _pm_inverse(z, q),
               lambda y: 1.0 + (q + 1.0) * (2.0 * np.asarray(y)) ** q),
        Branch(0.5, 1.0,
               lambda y: 2.0 * y - 1.0,
               lambda z: (np.asarray(z) + 1.0) / 2.0,
               lambda y: np.full_like(np.asarray(y, dtype=float), 2.0)),
    )
    return BaseMap("pm", fn, branches, kernel=(1, q), lipschitz=1.0 + 2.0 ** q * (q + 1.0) / 2.0 ** q,
                   params={"q": q})


# ---------------------------------------------------------------------------
# fiber domains


@dataclass(frozen=True)
class FiberDomain:
    """A box ``[lower, upper]`` or a closed disk of given center and radius."""

    kind: str
    lower: np.ndarray
    upper: np.ndarray
    radius: float = 0.0

    @classmethod
    def box(cls, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ParameterError("fiber box needs lower <= upper of equal shape")
        return cls("box", lo, hi)

    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0)):
        c = np.asarray(center, dtype=float)
        return cls("disk", c - radius, c + radius, float(radius))

    @classmethod
    def empty(cls):
        return cls("none", np.zeros(0), np.zeros(0))

    @property
    def dim(self):
        return self.lower.size

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def diam(self):
        if self.kind == "disk":
            return 2.0 * self.radius
        if self.kind == "none":
            return 1.0
        d = float(np.linalg.norm(self.upper - self.lower))
        return d if d > 0 else 1.0

    def contains(self, z, tol=1e-12):
        z = np.asarray(z, dtype=float).reshape(-1, self.dim)
        if self.kind == "disk":
            return np.linalg.norm(z - self.center, axis=1) <= self.radius + tol
        return np.all((z >= self.lower - tol) & (z <= self.upper + tol), axis=1)

    def from_unit(self, u):
        """Map uniforms in ``[0,1)^dim`` to uniform points of the domain."""
        u = np.asarray(u, dtype=float).reshape(-1, self.dim)
        if self.kind == "disk":
            r = self.radius * np.sqrt(u[:, 0])
            a = TWO_PI * u[:, 1]
            return self.center + np.column_stack([r * np.cos(a), r * np.sin(a)])
        return self.lower + u * (self.upper - self.lower)

    def clip(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "disk":
            v = z - self.center
            r = np.linalg.norm(v, axis=1, keepdims=True)
            scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
            return self.center + v * scale
        return np.clip(z, self.lower, self.upper)

    def rim_points(self, k=16):
        """``k`` points on the disk boundary, or the box corners."""
        if self.kind == "disk":
            a = TWO_PI * np.arange(k) / k
            return self.center + self.radius * np.column_stack([np.cos(a), np.sin(a)])
        if self.kind == "none":
            return np.zeros((0, 0))
        corners = np.array(np.meshgrid(*zip(self.lower, self.upper), indexing="ij"))
        return corners.reshape(self.dim, -1).T

    def boundary_point(self):
        if self.kind == "disk":
            return self.center + np.array([self.radius, 0.0])
        return self.upper.copy()


# ---------------------------------------------------------------------------
# fibered systems


@dataclass
class FiberedSystem:
    """Callable description of ``(X, T, Y, S, pi, sigma)``.

    All maps act row-wise on arrays: ``apply_T`` on ``(N, 1 + k)`` points,
    ``apply_S`` / ``project`` / ``section`` on base coordinates ``(N,)``.
    """

    name: str
    base: BaseMap
    fiber_domain: FiberDomain
    fiber_map: Optional[Callable] = None
    lipschitz_T: Optional[float] = None
    # R(y, z) = c z + g(y) allows a linear-recurrence fast path
    fiber_affine: Optional[tuple] = None
    section_point: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    dim_base: int = 1

    @property
    def dim_fiber(self):
        return self.fiber_domain.dim

    @property
    def dim(self):
        return 1 + self.dim_fiber

    # -- maps ---------------------------------------------------------------
    def apply_S(self, y):
        return self.base(y)

    def apply_T(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        y = x[:, 0]
        out = np.empty_like(x)
        out[:, 0] = self.base(y)
        if self.dim_fiber:
            out[:, 1:] = self.fiber_map(y, x[:, 1:])
        return out

    def project(self, x):
        return np.asarray(x, dtype=float).reshape(-1, self.dim)[:, 0].copy()

    def section(self, y, point=None):
        y = np.atleast_1d(np.asarray(y, dtype=float)) % 1.0
        p = self.section_point if point is None else np.asarray(point, dtype=float)
        if p is None:
            p = self.fiber_domain.center
        out = np.empty((y.size, self.dim))
        out[:, 0] = y
        if self.dim_fiber:
            out[:, 1:] = p
        return out

    # -- metrics ------------------------------------------------------------
    def metric_Y(self, y, y2):
        return circle_dist(y, y2)

    def fiber_metric(self, z, z2):
        z = np.asarray(z, dtype=float).reshape(-1, self.dim_fiber)
        z2 = np.asarray(z2, dtype=float).reshape(-1, self.dim_fiber)
        return np.linalg.norm(z - z2, axis=1) / self.fiber_domain.diam

    def metric_X(self, x, x2):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        x2 = np.asarray(x2, dtype=float).reshape(-1, self.dim)
        d = circle_dist(x[:, 0], x2[:, 0])
        if self.dim_fiber:
            d = np.maximum(d, self.fiber_metric(x[:, 1:], x2[:, 1:]))
        return d

    def pairwise_X(self, x, x2):
        """Dense ``(N, M)`` distance matrix."""
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        x2 = np.asarray(x2, dtype=float).reshape(-1, self.dim)
        D = circle_dist(x[:, None, 0], x2[None, :, 0])
        if self.dim_fiber:
            dz = np.linalg.norm(x[:, None, 1:] - x2[None, :, 1:], axis=-1) / self.fiber_domain.diam
            D = np.maximum(D, dz)
        return D

    # -- sampling / checks --------------------------------------------------
    def sample_X(self, rng, n):
        u = rng.random((n, self.dim))
        return self.from_unit(u)

    def from_unit(self, u):
        u = np.asarray(u, dtype=float).reshape(-1, self.dim)
        out = np.empty_like(u)
        out[:, 0] = u[:, 0]
        if self.dim_fiber:
            out[:, 1:] = self.fiber_domain.from_unit(u[:, 1:])
        return out

    def in_domain(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        ok = (x[:, 0] >= 0.0) & (x[:, 0] < 1.0) & np.isfinite(x[:, 0])
        if self.dim_fiber:
            ok &= self.fiber_domain.contains(x[:, 1:], tol)
        return ok

    def check_conjugacy(self, n=10_000, seed=0):
        """Max of ``d(pi(T x), S(pi x))`` over random points."""
        x = self.sample_X(keyed_rng(seed, 11), n)
        return float(np.max(self.metric_Y(self.project(self.apply_T(x)), self.apply_S(self.project(x)))))

    def check_section(self, n=10_000, seed=0):
        y = keyed_rng(seed, 12).random(n)
        return float(np.max(self.metric_Y(self.project(self.section(y)), y)))


def _check_fiber_map(fiber_map, base_name, domain, samples, seed):
    rng = keyed_rng(seed, 13)
    y = rng.random(samples)
    z = domain.from_unit(rng.random((samples, domain.dim)))
    # include the corners / rim, where escapes happen first
    if domain.kind == "box":
        corners = np.array(np.meshgrid(*[[lo, hi] for lo, hi in zip(domain.lower, domain.upper)]))
        corners = corners.reshape(domain.dim, -1).T
    else:
        a = np.linspace(0, TWO_PI, 64, endpoint=False)
        corners = domain.center + domain.radius * np.column_stack([np.cos(a), np.sin(a)])
    yc = np.repeat(np.linspace(0, 1, 257)[:-1], len(corners))
    zc = np.tile(corners, (256, 1))
    y = np.concatenate([y, yc])
    z = np.concatenate([z, zc])
    out = np.asarray(fiber_map(y, z), dtype=float).reshape(-1, domain.dim)
    bad = ~domain.contains(out)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DomainViolation(
            f"fiber map escapes the fiber domain: R({y[i]:.6g}, {z[i].tolist()}) = "
            f"{out[i].tolist()} over base map {base_name}",
            point=(float(y[i]), z[i].tolist()),
        )


def make_skew_product(base, fiber_map, fiber_domain, *, name=None, lipschitz_T=None,
                      fiber_affine=None, section_point=None, check_samples=4096, seed=0,
                      params=None):
    """Skew product ``T(y, z) = (S(y), R(y, z))`` on ``Y x Phi``.

    ``fiber_domain`` is a :class:`FiberDomain` or a ``(lower, upper)`` pair.
    ``fiber_map(y, z)`` takes ``(N,)`` and ``(N, k)`` arrays.  Raises
    :class:`DomainViolation` if a sampled image leaves the domain.
    """
    if not isinstance(base, BaseMap):
        base = BaseMap(getattr(base, "__name__", "base"), base)
    if not isinstance(fiber_domain, FiberDomain):
        fiber_domain = FiberDomain.box(*fiber_domain)
    k = fiber_domain.dim

    def R(y, z):
        return np.asarray(fiber_map(y, np.asarray(z).reshape(-1, k)), dtype=float).reshape(-1, k)

    _check_fiber_map(R, base.name, fiber_domain, check_samples, seed)
    return FiberedSystem(
        name=name or f"skew[{base.name}]",
        base=base,
        fiber_domain=fiber_domain,
        fiber_map=R,
        lipschitz_T=lipschitz_T,
        fiber_affine=fiber_affine,
        section_point=None if section_point is None else np.asarray(section_point, dtype=float),
        params=dict(params or {}),
    )


def base_system(base):
    """A circle map viewed as a fibered system with trivial fibers."""
    return FiberedSystem(name=base.name, base=base, fiber_domain=FiberDomain.empty(),
                         lipschitz_T=base.lipschitz, params=dict(base.params))


def default_offsets(radius=0.5):
    def offsets(y):
        y = np.asarray(y, dtype=float)
        return radius * np.column_stack([np.cos(TWO_PI * y), np.sin(TWO_PI * y)])
    offsets.radius = radius
    return offsets


def solenoid_system(lam=0.4, offsets=None, k=2, check_samples=4096):
    """Solenoid ``T(y, z) = (k y mod 1, lam z + offset(y))`` on the solid torus.

    Requires ``lam + max |offset| <= 1`` so the closed unit disk maps into
    itself.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ParameterError(f"solenoid contraction must lie in (0, 1), got {lam}")
    if offsets is None:
        offsets = default_offsets(0.5)
    ys = np.linspace(0.0, 1.0, check_samples, endpoint=False)
    omax = float(np.max(np.linalg.norm(offsets(ys), axis=1)))
    if lam + omax > 1.0 + 1e-12:
        i = int(np.argmax(np.linalg.norm(offsets(ys), axis=1)))
        raise DomainViolation(
            f"solenoid does not map the disk into itself: lam + max|offset| = "
            f"{lam} + {omax:.6g} > 1 (at y = {ys[i]:.6g})", point=(float(ys[i]),))
    base = expanding_map(k)

    def R(y, z):
        return lam * np.asarray(z).reshape(-1, 2) + offsets(y)

    return FiberedSystem(
        name="solenoid",
        base=base,
        fiber_domain=FiberDomain.disk(1.0),
        fiber_map=R,
        fiber_affine=(lam, offsets),
        params={"lam": lam, "k": k, "offset_max": omax},
    )


# ---------------------------------------------------------------------------
# shrinking and Lipschitz estimates


@dataclass(frozen=True)
class ShrinkEstimate:
    """Sampled lower envelope ``a_n`` of fiber-iterate diameters, plus its fit."""

    a: np.ndarray
    fit: DecayFit
    samples_per_fiber: int
    fibers_sampled: int
    shrinking: bool
    note: str = "sampled lower envelope of sup over fibers"

    def envelope(self, n):
        """Shrinking bound used downstream: fitted model, raised to the samples."""
        n = np.atleast_1d(np.asarray(n, dtype=int))
        if self.fit.model == "none":
            if self.fit.reason == "exact collapse":
                return np.where(n == 0, self.a[0], 0.0)
            return np.full(n.shape, float(np.max(self.a)))
        pred = self.fit.predict(np.maximum(n, 1))
        obs = np.where(n < self.a.size, self.a[np.minimum(n, self.a.size - 1)], 0.0)
        return np.maximum(pred, obs)


def estimate_shrinking(sys, n_max=30, fibers=64, pairs_per_fiber=64, seed=0):
    """``a_n = max`` over sampled fibers and same-fiber pairs of ``d(T^n x, T^n x')``.

    Fiber ``f`` draws from a stream keyed by ``(seed, f)``, so results do not
    depend on scheduling.
    """
    if n_max < 2 or fibers < 1:
        raise ParameterError("estimate_shrinking needs n_max >= 2 and fibers >= 1")
    k = sys.dim_fiber
    xs, xs2 = [], []
    for f in range(fibers):
        rng = keyed_rng(seed, 21, f)
        y = rng.random()
        u = rng.random((pairs_per_fiber, 2 * k))
        z1 = sys.fiber_domain.from_unit(u[:, :k]) if k else np.zeros((pairs_per_fiber, 0))
        z2 = sys.fiber_domain.from_unit(u[:, k:]) if k else np.zeros((pairs_per_fiber, 0))
        xs.append(np.column_stack([np.full(pairs_per_fiber, y), z1]))
        xs2.append(np.column_stack([np.full(pairs_per_fiber, y), z2]))
    x = np.concatenate(xs)
    x2 = np.concatenate(xs2)
    a = np.empty(n_max + 1)
    for n in range(n_max + 1):
        a[n] = float(np.max(sys.metric_X(x, x2))) if k else 0.0
        x = sys.apply_T(x)
        x2 = sys.apply_T(x2)
    fit = fit_decay(np.column_stack([np.arange(n_max + 1), a]))
    shrinking = fit.decays or fit.reason == "exact collapse"
    return ShrinkEstimate(a, fit, pairs_per_fiber, fibers, shrinking)


def estimate_lipschitz(sys, samples=4096, seed=0):
    """Max over sampled nearby pairs of ``d(Tx, Tx') / d(x, x')``; a lower bound on L.

    Pair ``i`` uses row ``i`` of one random block, so a larger ``samples``
    extends the same pair sequence.
    """
    if samples < 2:
        raise ParameterError("estimate_lipschitz needs samples >= 2")
    d = sys.dim
    U = keyed_rng(seed, 22).random((samples, 2 * d + 1))
    x = sys.from_unit(U[:, :d])
    step = 10.0 ** (-6.0 + 5.0 * U[:, 2 * d])
    x2 = x + step[:, None] * (2.0 * U[:, d:2 * d] - 1.0)
    x2[:, 0] %= 1.0
    if sys.dim_fiber:
        x2[:, 1:] = sys.fiber_domain.clip(x2[:, 1:])
    den = sys.metric_X(x, x2)
    num = sys.metric_X(sys.apply_T(x), sys.apply_T(x2))
    ok = den > 0
    return float(np.max(num[ok] / den[ok]))


# ---------------------------------------------------------------------------
# moduli of continuity


@dataclass(frozen=True)
class ModulusClass:
    """Hölder ``r^alpha`` or log-Hölder ``1 / log(r_alpha / r)^alpha`` modulus."""

    kind: str
    alpha: float
    r_alpha: float = 0.0

    def __post_init__(self):
        if self.kind == "holder":
            if not 0.0 < self.alpha <= 1.0:
                raise ParameterError(f"Hölder exponent must lie in (0, 1], got {self.alpha}")
        elif self.kind == "log_holder":
            if self.alpha <= 0.0:
                raise ParameterError(f"log-Hölder exponent must be positive, got {self.alpha}")
            if self.r_alpha == 0.0:
                # concave on (0, 1] iff log(r_alpha) >= alpha + 1
                object.__setattr__(self, "r_alpha", math.exp(self.alpha + 1.0))
            if self.r_alpha <= 1.0:
                raise ParameterError("r_alpha must exceed 1")
        else:
            raise ParameterError(f"unknown modulus kind {self.kind!r}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "holder":
            return np.maximum(r, 0.0) ** self.alpha
        rr = np.clip(r, 1e-300, 1.0)
        out = np.log(self.r_alpha / rr) ** (-self.alpha)
        return np.where(r <= 0.0, 0.0, out)

    def is_concave_increasing(self, grid=None):
        r = np.linspace(0.0, 1.0, 2001) if grid is None else np.asarray(grid)
        w = self(r)
        inc = np.all(np.diff(w) >= -1e-15)
        second = w[2:] - 2 * w[1:-1] + w[:-2]
        return bool(inc and np.all(second <= 1e-12) and w[0] == 0.0)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "r_alpha": self.r_alpha}


def log_holder_composition_constant(alpha, L, n_max=200, r_alpha=0.0, grid_size=400):
    """Smallest ``D`` with ``holl(L^n r) <= D n^alpha holl(r)`` on a grid of ``(n, r)``."""
    w = ModulusClass("log_holder", alpha, r_alpha)
    r = np.logspace(-300, 0, grid_size)
    D = 0.0
    for n in range(1, n_max + 1):
        ratio = w(np.minimum(L ** n * r, 1e300)) / w(r) / n ** alpha
        D = max(D, float(np.max(ratio)))
    return D


# ---------------------------------------------------------------------------
# registry


def _skew(base="doubling", q=0.3, k=2, contraction=0.4, amplitude=0.25, fiber="cos"):
    if base == "doubling":
        S = expanding_map(2)
    elif base in ("expanding", "expanding_k"):
        S = expanding_map(k)
    elif base == "pm":
        S = pomeau_manneville(q)
    else:
        raise ParameterError(f"unknown skew base {base!r}")
    c, a = float(contraction), float(amplitude)
    params = {"base": base, "q": q, "k": k, "contraction": c, "amplitude": a, "fiber": fiber}
    if fiber == "cos":
        return make_skew_product(
            S, lambda y, z: c * z + a * np.cos(TWO_PI * y)[:, None], ([-1.0], [1.0]),
            name="skew", fiber_affine=(c, lambda y: (a * np.cos(TWO_PI * np.asarray(y)))[:, None]),
            params=params)
    if fiber == "linear":
        return make_skew_product(S, lambda y, z: c * z, ([-1.0], [1.0]), name="skew",
                                 fiber_affine=(c, lambda y: np.zeros((np.size(y), 1))),
                                 section_point=[0.0], params=params)
    if fiber == "identity":
        return make_skew_product(S, lambda y, z: z, ([-1.0], [1.0]), name="skew",
                                 fiber_affine=(1.0, lambda y: np.zeros((np.size(y), 1))),
                                 params=params)
    if fiber == "rational":
        return make_skew_product(S, lambda y, z: z / (1.0 + z), ([0.0], [1.0]), name="skew",
                                 section_point=[0.0], params=params)
    if fiber == "pinch":
        # the two fibers over y = 0 and y = 1/2 collapse onto z = 1/2
        return make_skew_product(
            S, lambda y, z: 0.5 + c * np.abs(np.sin(TWO_PI * y))[:, None] * (z - 0.5)
            + a * np.sin(TWO_PI * y)[:, None] * 0.5,
            ([0.0], [1.0]), name="skew", params=params)
    raise ParameterError(f"unknown fiber kind {fiber!r}")


def _solenoid(lam=0.4, radius=0.5, k=2):
    return solenoid_system(lam, default_offsets(radius), k=int(k))


SYSTEMS = {
    "doubling": lambda: base_system(expanding_map(2)),
    "pm": lambda q=0.3: base_system(pomeau_manneville(q)),
    "expanding_k": lambda k=3: base_system(expanding_map(k)),
    "solenoid": _solenoid,
    "skew": _skew,
}


def make_system(name, **params):
    """Construct a zoo system by registry name."""
    try:
        ctor = SYSTEMS[name]
    except KeyError:
        raise ParameterError(f"unknown system {name!r}; known: {sorted(SYSTEMS)}") from None
    return ctor(**params)
