"""Standard normal pdf, cdf and quantile.

The quantile starts from Acklam's rational approximation (relative error
about 1.15e-9) and applies one Halley correction against an erfc-based cdf,
which brings it to full double precision.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)

_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT2PI


def norm_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x / SQRT2)


def _acklam_lower(p: np.ndarray) -> np.ndarray:
    """Initial quantile guess for 0 < p <= 0.5."""
    out = np.empty_like(p)
    tail = p < _P_LOW
    q = np.sqrt(-2.0 * np.log(p[tail]))
    out[tail] = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
        ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    mid = ~tail
    q = p[mid] - 0.5
    t = q * q
    out[mid] = (((((_A[0] * t + _A[1]) * t + _A[2]) * t + _A[3]) * t + _A[4]) * t + _A[5]) * q / \
        (((((_B[0] * t + _B[1]) * t + _B[2]) * t + _B[3]) * t + _B[4]) * t + 1.0)
    return out


def norm_ppf(p):
    """Inverse standard normal cdf, vectorised; ``p`` must lie in (0, 1)."""
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise ValueError("norm_ppf requires 0 < p < 1")
    upper = p > 0.5
    # 1 - p is exact for p in [0.5, 1), so work in the lower half where erfc is accurate.
    lo = np.where(upper, 1.0 - p, p)
    x = _acklam_lower(lo)
    e = 0.5 * erfc(-x / SQRT2) - lo
    u = e * SQRT2PI * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    x = np.where(upper, -x, x)
    return float(x[0]) if scalar else x
