"""Correlation decay, the correlation-lifting bound and CLT diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from ._util import keyed_rng
from .decay import DecayFit, fit_decay  # noqa: F401  (re-exported)
from .errors import ParameterError
from .measures import DEFAULT_JITTER, birkhoff_sums, integrate, orbit
from .transfer import build_ulam, disintegration_via_transfer, invariant_density

N_BATCHES = 50


@dataclass
class CorrelationTrace:
    """``|Cov(f o T^n, g)|`` for ``n = 0..n_max`` with standard errors.

    ``cov`` keeps the signed covariances; ``values`` are their moduli.
    """

    lags: np.ndarray
    cov: np.ndarray
    stderr: np.ndarray
    estimator: str
    fit: DecayFit
    noise_floor: float = 0.0

    @property
    def values(self):
        return np.abs(self.cov)

    def to_dict(self):
        return {"lags": self.lags.tolist(), "cov": self.cov.tolist(),
                "stderr": self.stderr.tolist(), "estimator": self.estimator,
                "fit": self.fit.to_dict(), "noise_floor": self.noise_floor}


def _batch_se(prod, n_batches=N_BATCHES):
    b = prod.size // n_batches
    if b < 1:
        return float("nan")
    means = prod[: b * n_batches].reshape(n_batches, b).mean(1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def lagged_covariances(fx, gx, n_max):
    """Signed ``Cov(f(x_{t+n}), g(x_t))`` along one series, with batch-means errors."""
    L = fx.size
    if L <= n_max + 2 * N_BATCHES:
        raise ParameterError("orbit too short for the requested lags")
    cov = np.empty(n_max + 1)
    se = np.empty(n_max + 1)
    for n in range(n_max + 1):
        a = fx[n:]
        b = gx[: L - n]
        prod = (a - a.mean()) * (b - b.mean())
        cov[n] = prod.mean()
        se[n] = _batch_se(prod)
    return cov, se


def _trace(lags, cov, se, estimator):
    floor = float(np.median(se[~np.isnan(se)])) if np.any(~np.isnan(se)) else 0.0
    v = np.abs(cov)
    # keep lags whose covariance clears twice its standard error
    keep = v > 2 * np.nan_to_num(se)
    if estimator != "orbit":
        keep = v > 1e-14
    if keep.sum():
        fit = fit_decay(np.column_stack([lags[keep], v[keep]]))
    else:
        why = "exact collapse" if np.all(v == 0) else "below noise floor"
        fit = DecayFit("none", 0.0, 0.0, 0.0, floor=floor, reason=why)
    return CorrelationTrace(lags, cov, se, estimator, fit, floor)


def orbit_series(sys, length, burn_in=1000, x0=None, jitter=DEFAULT_JITTER, seed=0):
    """One jittered orbit of ``T`` with burn-in removed."""
    if x0 is None:
        x0 = sys.sample_X(keyed_rng(seed, 81), 1)[0]
    return orbit(sys, x0, burn_in + length - 1, jitter=jitter, seed=seed)[burn_in:]


def correlations(sys, f, g, n_max=30, *, estimator="orbit", orbit_length=1_000_000,
                 burn_in=1000, jitter=DEFAULT_JITTER, seed=0, op=None, m=1024, path=None):
    """Correlation sequence ``Corr_n(f, g) = |int f o T^n g - int f int g|``.

    ``estimator="orbit"`` averages along one long jittered orbit (or a
    supplied ``path``) and reports batch-means standard errors.
    ``estimator="operator"`` (base systems only) evaluates
    ``sum_i p_i g_i (P^n f)_i`` with an Ulam matrix.
    """
    if estimator == "orbit":
        xs = path if path is not None else orbit_series(sys, orbit_length, burn_in, jitter=jitter,
                                                          seed=seed)
        fx = np.asarray(f(xs), dtype=float)
        gx = np.asarray(g(xs), dtype=float)
        cov, se = lagged_covariances(fx, gx, n_max)
        return _trace(np.arange(n_max + 1), cov, se, "orbit")
    if estimator == "operator":
        if sys.dim_fiber:
            raise ParameterError("the operator estimator works on base systems only")
        op = op or build_ulam(sys.base, m)
        p = invariant_density(op).density
        c = op.centers[:, None]
        fv = np.asarray(f(c), dtype=float)
        gv = np.asarray(g(c), dtype=float)
        mf, mg = p @ fv, p @ gv
        cov = np.empty(n_max + 1)
        h = fv.copy()
        for n in range(n_max + 1):
            cov[n] = p @ (gv * h) - mf * mg
            h = op.koopman(h)
        return _trace(np.arange(n_max + 1), cov, np.zeros(n_max + 1), "operator")
    raise ParameterError(f"unknown estimator {estimator!r}")


def correlation_on_atoms(sys, mu, f, g, n):
    """``int f o T^n g dmu - int f dmu int g dmu`` for an atomic ``mu``.

    Exact for a measure whose atoms are permuted by ``T``.
    """
    x = mu.points
    gx = np.asarray(g(x), dtype=float)
    for _ in range(n):
        x = sys.apply_T(x)
    fx = np.asarray(f(x), dtype=float)
    return float(mu.weights @ (fx * gx) - integrate(mu, f) * integrate(mu, g))


# ---------------------------------------------------------------------------
# lifting bound


@dataclass
class LiftBoundRow:
    k: int
    m: int
    lhs: float
    rhs: float
    base_term: float
    shrink_term: float
    se: float

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.slack >= -3.0 * self.se

    def to_dict(self):
        return {"k": self.k, "m": self.m, "lhs": self.lhs, "rhs": self.rhs,
                "base_term": self.base_term, "shrink_term": self.shrink_term, "se": self.se,
                "slack": self.slack, "holds": self.holds}


def correlation_lift_bound_check(sys, f, g, pairs, shrink, hol_f, modulus=None, *,
                                 orbit_length=1_000_000, burn_in=1000, n_transfer=12,
                                 n_grid=256, jitter=DEFAULT_JITTER, seed=0):
    """Check ``Corr_{k+m}(f, g) <= Corr_m(xi(f o T^k), xi(g)) + H omega(a_k) |g|_1``.

    Both sides are estimated on one shared orbit: the left on ``x_t``, the
    right on its projection ``y_t = pi(x_t)``, with ``xi`` computed by the
    transfer route on a grid and interpolated.  ``hol_f`` is the constant of
    ``f`` for ``modulus`` (identity when omitted).
    """
    modulus = modulus or (lambda r: r)
    xs = orbit_series(sys, orbit_length, burn_in, jitter=jitter, seed=seed)
    ys = xs[:, 0]
    g_abs = float(np.mean(np.abs(g(xs))))
    op = build_ulam(sys.base, 256)
    dens = invariant_density(op).density
    xi_g = disintegration_via_transfer(sys, g, n_transfer, n_grid, density=dens)
    fx = np.asarray(f(xs), dtype=float)
    gx = np.asarray(g(xs), dtype=float)
    gy = xi_g(ys)
    rows = []
    ks = sorted({k for k, _ in pairs})
    xi_fk = {}
    for k in ks:
        def fk(x, k=k):
            for _ in range(k):
                x = sys.apply_T(x)
            return f(x)
        xi_fk[k] = disintegration_via_transfer(sys, fk, n_transfer, n_grid, density=dens)(ys)
    lhs_c, lhs_se = lagged_covariances(fx, gx, max(k + m for k, m in pairs))
    rhs = {k: lagged_covariances(xi_fk[k], gy, max(m for kk, m in pairs if kk == k)) for k in ks}
    for k, m in pairs:
        rhs_c, rhs_se = rhs[k]
        a_k = float(shrink.envelope([k])[0])
        shrink_term = hol_f * float(modulus(a_k)) * g_abs
        se = math.hypot(lhs_se[k + m], rhs_se[m])
        rows.append(LiftBoundRow(k, m, abs(lhs_c[k + m]), abs(rhs_c[m]) + shrink_term,
                                 abs(rhs_c[m]), shrink_term, se))
    return rows


# ---------------------------------------------------------------------------
# CLT


@dataclass
class CltReport:
    sigma2: float
    mean: float
    ks_statistic: float
    ks_pvalue: float
    samples: np.ndarray = field(repr=False)
    n_block: int = 0
    gk_terms: int = 0
    degenerate: bool = False

    def to_dict(self):
        return {"sigma2": self.sigma2, "mean": self.mean, "ks_statistic": self.ks_statistic,
                "ks_pvalue": self.ks_pvalue, "n_block": self.n_block,
                "n_samples": int(self.samples.size), "gk_terms": self.gk_terms,
                "degenerate": self.degenerate}


def green_kubo(cov, se, patience=3):
    """``sigma^2 = C_0 + 2 sum_{n >= 1} C_n``, stopped after ``patience``
    consecutive lags below the noise floor (median standard error)."""
    floor = float(np.nanmedian(se)) if np.any(se > 0) else 0.0
    total = cov[0]
    quiet = 0
    used = 1
    for n in range(1, cov.size):
        if abs(cov[n]) < 2 * floor:
            quiet += 1
            if quiet >= patience:
                break
        else:
            quiet = 0
        total += 2 * cov[n]
        used += 1
    return float(total), used


def clt_diagnostic(sys, measure, f, n_block=10_000, samples=1000, *, sigma2=None,
                   max_lag=200, orbit_length=1_000_000, jitter=DEFAULT_JITTER, seed=0):
    """Normalized Birkhoff sums ``(S_n f - n mu(f)) / sqrt(n)`` against ``N(0, sigma^2)``.

    Start points are drawn from ``measure`` (an ``EmpiricalMeasure`` or a
    ``LiftResult``); ``sigma^2`` comes from a Green-Kubo sum on one long
    orbit unless supplied.
    """
    mu = measure.lifted if hasattr(measure, "lifted") else measure
    rng = keyed_rng(seed, 82)
    idx = rng.choice(len(mu), size=samples, p=mu.weights)
    starts = mu.points[idx]
    mean = integrate(mu, f)
    terms = 0
    if sigma2 is None:
        xs = orbit_series(sys, orbit_length, jitter=jitter, seed=seed)
        fx = np.asarray(f(xs), dtype=float)
        cov, se = lagged_covariances(fx, fx, max_lag)
        sigma2, terms = green_kubo(cov, se)
    sums = birkhoff_sums(sys, starts, n_block, f, jitter=jitter, seed=seed)
    z = (sums - n_block * mean) / math.sqrt(n_block)
    if sigma2 <= 1e-10:
        return CltReport(float(sigma2), mean, float("nan"), float("nan"), z, n_block, terms, True)
    ks = sps.kstest(z, "norm", args=(0.0, math.sqrt(sigma2)))
    return CltReport(float(sigma2), mean, float(ks.statistic), float(ks.pvalue), z, n_block,
                     terms, False)
