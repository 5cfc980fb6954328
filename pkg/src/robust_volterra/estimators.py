"""Loss, score, and per-sample weighting functions for robust recursion.

The Geman-McClure family is the primary estimator: a bounded, redescending
loss ``e^2 / (sigma^2 + e^2)`` whose weighting factor
``sigma^2 / (sigma^2 + e^2)^2`` turns the robust cost into a weighted
least-squares recursion.  Hampel three-part and least-p-norm weightings are
provided as baselines, plus a plain (unweighted) choice that reduces the
recursion to conventional RLS.

All scalar functions accept arrays and broadcast.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

# median-to-sigma factor for Gaussian data, used by the windowed Hampel scale
MAD_SCALE = 1.483


def _check_sigma(sigma: float) -> float:
    if not (sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return float(sigma)


def gm_loss(e, sigma: float):
    """Geman-McClure loss ``e^2 / (sigma^2 + e^2)``; bounded in [0, 1)."""
    s2 = _check_sigma(sigma) ** 2
    e = np.asarray(e, dtype=np.float64)
    out = e * e / (s2 + e * e)
    return float(out) if out.ndim == 0 else out

def gm_score(e, sigma: float):
    """Derivative of :func:`gm_loss`: ``2 sigma^2 e / (sigma^2 + e^2)^2``.

    Odd, bounded, and redescending: the influence of an error decays to
    zero as its magnitude grows, which is what caps outlier impact.
    """
    s2 = _check_sigma(sigma) ** 2
    e = np.asarray(e, dtype=np.float64)
    den = s2 + e * e
    out = 2.0 * s2 * e / (den * den)
    return float(out) if out.ndim == 0 else out


def gm_weight(e, sigma: float):
    """Per-sample weighting ``sigma^2 / (sigma^2 + e^2)^2``.

    Equals ``gm_score(e) / (2 e)``; strictly positive, even, and
    non-increasing in ``|e|`` with maximum ``1 / sigma^2`` at zero.
    """
    s2 = _check_sigma(sigma) ** 2
    e = np.asarray(e, dtype=np.float64)
    den = s2 + e * e
    out = s2 / (den * den)
    return float(out) if out.ndim == 0 else out


def hampel_weight(e, scale: float, t1: float = 0.6, t2: float = 1.3, t3: float = 1.8):
    """Three-part redescending weight with thresholds ``t1/t2/t3 * scale``.

    1 inside the inlier zone, ``t1*scale/|e|`` in the clip zone, linearly
    redescending to 0 across the third zone, 0 beyond.  Continuous at all
    zone boundaries.
    """
    if not (scale > 0):
        raise ValueError(f"scale must be positive, got {scale!r}")
    if not (0 < t1 < t2 < t3):
        raise ValueError(f"thresholds must satisfy 0 < t1 < t2 < t3, got {(t1, t2, t3)}")
    a = np.abs(np.asarray(e, dtype=np.float64))
    s1, s2, s3 = t1 * scale, t2 * scale, t3 * scale
    safe = np.maximum(a, s1)  # below s1 the weight is 1, so the divisor is unused
    out = np.where(
        a <= s1,
        1.0,
        np.where(
            a <= s2,
            s1 / safe,
            np.where(a < s3, (s1 / safe) * (s3 - a) / (s3 - s2), 0.0),
        ),
    )
    return float(out) if out.ndim == 0 else out


def lp_weight(e, p: float, floor: float = 1e-3):
    """Least-p-norm weight ``max(|e|, floor)^(p-2)`` for ``1 < p <= 2``.

    The floor keeps the weight finite at ``e = 0`` (the exponent is
    negative); ``p = 2`` reduces to a constant weight of 1.
    """
    if not (1.0 < p <= 2.0):
        raise ValueError(f"p must lie in (1, 2], got {p!r}")
    if not (floor > 0):
        raise ValueError(f"floor must be positive, got {floor!r}")
    a = np.maximum(np.abs(np.asarray(e, dtype=np.float64)), floor)
    out = a ** (p - 2.0)
    return float(out) if out.ndim == 0 else out


class PlainRls:
    """Constant unit weighting: the recursion becomes conventional RLS."""

    name = "rls"

    def weight(self, e: float) -> float:
        return 1.0

    def reset(self) -> None:
        pass


@dataclass
class GemanMcClure:
    """Geman-McClure weighting with shape constant ``sigma``."""

    sigma: float
    name = "gm"

    def __post_init__(self):
        _check_sigma(self.sigma)

    def weight(self, e: float) -> float:
        return gm_weight(e, self.sigma)

    def loss(self, e: float) -> float:
        return gm_loss(e, self.sigma)

    def score(self, e: float) -> float:
        return gm_score(e, self.sigma)

    def reset(self) -> None:
        pass


@dataclass
class HampelMEstimate:
    """Hampel three-part weighting with a self-tuned error scale.

    The scale is ``MAD_SCALE`` times the median of the last ``window``
    absolute errors, so the thresholds track the ambient noise level.
    While the window sees only zeros the weight stays 1.
    """

    t1: float = 0.6
    t2: float = 1.3
    t3: float = 1.8
    window: int = 14
    _errors: deque = field(init=False, repr=False)

    name = "rlm"

    def __post_init__(self):
        if not (0 < self.t1 < self.t2 < self.t3):
            raise ValueError(
                f"thresholds must satisfy 0 < t1 < t2 < t3, got {(self.t1, self.t2, self.t3)}"
            )
        if int(self.window) < 1:
            raise ValueError(f"window must be >= 1, got {self.window!r}")
        self._errors = deque(maxlen=int(self.window))

    def weight(self, e: float) -> float:
        self._errors.append(abs(float(e)))
        scale = MAD_SCALE * float(np.median(self._errors))
        if scale <= 0.0:
            return 1.0
        return hampel_weight(e, scale, self.t1, self.t2, self.t3)

    def reset(self) -> None:
        self._errors.clear()


@dataclass
class LeastPNorm:
    """Least-p-norm weighting ``|e|^(p-2)`` with a small-error floor."""

    p: float = 1.2
    floor: float = 1e-3

    name = "rlpn"

    def __post_init__(self):
        if not (1.0 < self.p <= 2.0):
            raise ValueError(f"p must lie in (1, 2], got {self.p!r}")
        if not (self.floor > 0):
            raise ValueError(f"floor must be positive, got {self.floor!r}")

    def weight(self, e: float) -> float:
        return lp_weight(e, self.p, self.floor)

    def reset(self) -> None:
        pass
