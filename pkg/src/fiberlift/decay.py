"""Exponential / polynomial decay models for positive decreasing sequences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TIE_MARGIN = 0.05
_TINY = 1e-300


@dataclass(frozen=True)
class DecayFit:
    """Fitted decay model.

    ``model`` is ``"exponential"`` (``v_n ~ C * rate**n``), ``"polynomial"``
    (``v_n ~ C * n**-rate``) or ``"none"``.  ``reason`` explains a ``"none"``
    result (``"exact collapse"``, ``"non-decaying"``, ``"too few points"``).
    """

    model: str
    rate: float
    C: float
    residual: float
    floor: float = 0.0
    n_used: int = 0
    reason: str = ""

    @property
    def decays(self):
        return self.model in ("exponential", "polynomial")

    @property
    def theta(self):
        return self.rate if self.model == "exponential" else None

    @property
    def degree(self):
        return self.rate if self.model == "polynomial" else None

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        if self.model == "exponential":
            return self.C * self.rate ** n
        if self.model == "polynomial":
            return self.C * np.maximum(n, 1.0) ** (-self.rate)
        return np.full_like(n, np.nan)

    def tail_sum(self, start, modulus=lambda r: r, horizon=100000):
        """``sum_{n >= start} modulus(predict(n))``; ``inf`` when not summable."""
        if self.model == "none":
            return 0.0 if self.reason == "exact collapse" else np.inf
        n = np.arange(start, start + horizon, dtype=float)
        return float(np.sum(modulus(self.predict(n))))

    def to_dict(self):
        return {
            "model": self.model,
            "rate": self.rate,
            "C": self.C,
            "residual": self.residual,
            "floor": self.floor,
            "n_used": self.n_used,
            "reason": self.reason,
        }


def _lstsq(x, y):
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return coef, float(np.sqrt(np.mean(res**2)))


def noise_floor(v):
    """Median of the trailing 10% when it has stopped decreasing, else 0."""
    v = np.abs(np.asarray(v, dtype=float))
    k = max(2, int(np.ceil(0.1 * v.size)))
    if v.size < 2 * k:
        return 0.0
    tail = np.median(v[-k:])
    prev = np.median(v[-2 * k:-k])
    # a plateau has stalled medians and no longer decreases step by step
    monotone = np.mean(np.diff(v[-2 * k:]) < 0) >= 0.8
    if monotone and v.size > 2 * k + 1 and np.all(v[1:] > _TINY):
        # ... unless it creeps down far slower than the series did before
        lv = np.log(v[1:])
        early = (lv[0] - lv[-2 * k]) / max(lv.size - 2 * k, 1)
        late = (lv[-2 * k] - lv[-1]) / (2 * k - 1)
        monotone = not (early > 0 and late < 0.05 * early)
    if tail > _TINY and tail >= 0.3 * prev and not monotone:
        return float(tail)
    return 0.0


def fit_decay(values, min_points=5):
    """Fit ``(n, v_n)`` pairs by least squares in log space.

    Both ``log v`` against ``n`` and against ``log n`` are fitted on the points
    above the noise floor (``n >= 1``).  The polynomial model must beat the
    exponential residual by 5% to be chosen.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = np.column_stack([np.arange(arr.size), arr])
    n, v = arr[:, 0], np.abs(arr[:, 1])
    if v.size and np.all(v[n >= 1] <= _TINY):
        return DecayFit("none", 0.0, 0.0, 0.0, reason="exact collapse")
    floor = noise_floor(v)
    keep = (v > max(3.0 * floor, _TINY)) & (n >= 1)
    if floor > 0 and v[n >= 1].size and np.max(v[n >= 1]) <= 3.0 * floor:
        return DecayFit("none", 1.0, float(floor), 0.0, floor=floor, reason="non-decaying")
    if keep.sum() < min_points:
        return DecayFit("none", np.nan, np.nan, np.nan, floor=floor,
                        n_used=int(keep.sum()), reason="too few points")
    x, y = n[keep], np.log(v[keep])
    (c_e, s_e), r_e = _lstsq(x, y)
    (c_p, s_p), r_p = _lstsq(np.log(x), y)
    used = int(keep.sum())
    if r_p < (1.0 - TIE_MARGIN) * r_e:
        if -s_p <= 1e-9:
            return DecayFit("none", float(-s_p), float(np.exp(c_p)), r_p, floor, used,
                            "non-decaying")
        return DecayFit("polynomial", float(-s_p), float(np.exp(c_p)), r_p, floor, used)
    theta = float(np.exp(s_e))
    if theta >= 1.0 - 1e-9:
        return DecayFit("none", theta, float(np.exp(c_e)), r_e, floor, used, "non-decaying")
    return DecayFit("exponential", theta, float(np.exp(c_e)), r_e, floor, used)
