"""Raster pictures of ``T^n(U)`` in annulus coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ParameterError

TWO_PI = 2.0 * math.pi
EXTENT = 1.6  # image covers [-EXTENT, EXTENT]^2


@dataclass
class Rendering:
    """Boolean rasters of ``T^n(U)`` for ``n = 0..n_iter``."""

    rasters: list
    size: int
    n_points: int

    @property
    def final(self):
        return self.rasters[-1]

    def nesting_violations(self):
        """Pixels of ``T^{n+1}(U)`` outside the 1-pixel dilation of ``T^n(U)``, per ``n``."""
        return [int(np.sum(self.rasters[n + 1] & ~dilate(self.rasters[n])))
                for n in range(len(self.rasters) - 1)]


def dilate(lit):
    out = lit.copy()
    out[1:, :] |= lit[:-1, :]
    out[:-1, :] |= lit[1:, :]
    tmp = out.copy()
    out[:, 1:] |= tmp[:, :-1]
    out[:, :-1] |= tmp[:, 1:]
    return out


def annulus_coords(sys, x):
    """Planar point ``(1 + w/2) e^{2 pi i y}`` with ``w in [-1, 1]`` the first fiber coordinate."""
    dom = sys.fiber_domain
    z = x[:, 1]
    if dom.kind == "disk":
        w = (z - dom.center[0]) / dom.radius
    else:
        lo, hi = dom.lower[0], dom.upper[0]
        w = 2.0 * (z - lo) / (hi - lo) - 1.0
    r = 1.0 + 0.5 * w
    a = TWO_PI * x[:, 0]
    return r * np.cos(a), r * np.sin(a)


def rasterize(sys, x, size):
    px, py = annulus_coords(sys, x)
    scale = size / (2 * EXTENT)
    col = np.clip(((px + EXTENT) * scale).astype(np.int64), 0, size - 1)
    row = np.clip(((EXTENT - py) * scale).astype(np.int64), 0, size - 1)
    lit = np.zeros((size, size), dtype=bool)
    lit[row, col] = True
    return lit


def initial_grid(sys, size):
    """Grid on ``U = X`` fine enough for pixel-level coverage.

    Base points ``i / M`` with ``M`` odd (coprime to the expansion) are
    permuted by ``y -> k y``, so images of the grid stay on it and nesting
    can be checked pixel by pixel.  Fiber spacing is about a pixel.
    """
    k = int(sys.base.params.get("k", 2))
    M = 4 * size + 1
    while math.gcd(M, k) != 1:
        M += 2
    y = np.arange(M) / M
    pix = 2 * EXTENT / size  # pixel width in image units; fiber radius spans 0.5
    dom = sys.fiber_domain
    if dom.kind == "disk":
        step = pix / 0.5 * dom.radius
        g = np.arange(-dom.radius, dom.radius + step / 2, step)
        zz = np.array(np.meshgrid(g, g, indexing="ij")).reshape(2, -1).T + dom.center
        z = zz[np.linalg.norm(zz - dom.center, axis=1) <= dom.radius]
    elif dom.dim == 1:
        n = max(2, int(math.ceil(1.0 / (pix / 2))))
        z = np.linspace(dom.lower[0], dom.upper[0], n)[:, None]
    else:
        raise CapabilityError("rendering supports one-dimensional or disk fibers")
    Y = np.repeat(y, z.shape[0])
    Z = np.tile(z, (M, 1))
    return np.column_stack([Y, Z])


def render_attractor(sys, n_iter=8, size=256, points=None):
    """Rasters of ``T^n(U)``, ``n = 0..n_iter``, for ``U`` the whole phase space."""
    if sys.dim_fiber == 0 or sys.fiber_domain.kind not in ("disk", "box"):
        raise CapabilityError(f"{sys.name} has no fiber to draw")
    if sys.fiber_domain.kind == "box" and sys.dim_fiber != 1:
        raise CapabilityError("rendering supports one-dimensional or disk fibers")
    if n_iter < 0 or size < 8:
        raise ParameterError("need n_iter >= 0 and size >= 8")
    x = initial_grid(sys, size) if points is None else np.asarray(points, dtype=float)
    rasters = [rasterize(sys, x, size)]
    for _ in range(n_iter):
        x = sys.apply_T(x)
        rasters.append(rasterize(sys, x, size))
    return Rendering(rasters, size, x.shape[0])


def annulus_mask(size, inner=0.5, outer=1.5):
    """Pixels whose cell meets the closed annulus ``inner <= r <= outer``."""
    c = (np.arange(size) + 0.5) * (2 * EXTENT / size) - EXTENT
    X, Yc = np.meshgrid(c, -c)
    r = np.hypot(X, Yc)
    half = math.sqrt(2) * EXTENT / size
    return (r >= inner - half) & (r <= outer + half)
