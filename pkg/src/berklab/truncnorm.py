"""Numerically stable truncated-normal quantities.

The learning recursion parameterizes posteriors by the mode and variance of
an untruncated normal whose mode can drift far outside the support, so the
mean and mass formulas are written in terms of the scaled complementary
error function to avoid cancellation in the far-tail regime.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, erfcx

_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def trunc_mean(m, sigma, lo: float, hi: float):
    """Mean of a normal(m, sigma^2) truncated to [lo, hi]; vectorized in m."""
    m = np.asarray(m, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), m.shape)
    mid = 0.5 * (lo + hi)
    # reflect so the mode sits at or below the midpoint
    flip = m > mid
    mm = np.where(flip, lo + hi - m, m)
    u = (lo - mm) / (sigma * _SQRT2)
    w = (hi - mm) / (sigma * _SQRT2)

    # hazard-style form, safe when both tail arguments are large positive
    with np.errstate(over="ignore", under="ignore"):
        decay = np.exp(u * u - w * w)  # <= 1 since |u| <= w after reflection
        num_s = 1.0 - decay
        den_s = erfcx(np.maximum(u, 0.0)) - erfcx(w) * decay
        safe = np.where(den_s > 0.0, den_s, 1.0)
        ratio_far = _SQRT_2_OVER_PI * num_s / safe

        num_d = np.exp(-u * u) - np.exp(-w * w)
        den_d = 0.5 * (erfc(u) - erfc(w))
        safe_d = np.where(den_d > 0.0, den_d, 1.0)
        ratio_near = 0.5 * _SQRT_2_OVER_PI * num_d / safe_d

    ratio = np.where(u >= 0.0, ratio_far, ratio_near)
    out = mm + sigma * ratio
    out = np.where(flip, lo + hi - out, out)
    out = np.clip(out, lo, hi)
    return out if out.ndim else float(out)


def log_mass(m, sigma, lo: float, hi: float):
    """log P(lo <= X <= hi) for X ~ normal(m, sigma^2); vectorized in m."""
    m = np.asarray(m, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), m.shape)
    mid = 0.5 * (lo + hi)
    mm = np.where(m > mid, lo + hi - m, m)
    u = (lo - mm) / (sigma * _SQRT2)
    w = (hi - mm) / (sigma * _SQRT2)
    with np.errstate(over="ignore", under="ignore"):
        decay = np.exp(u * u - w * w)
        far = np.log(0.5) - u * u + np.log(
            np.maximum(erfcx(np.maximum(u, 0.0)) - erfcx(w) * decay, 1e-300))
        near = np.log(np.maximum(0.5 * (erfc(u) - erfc(w)), 1e-300))
    out = np.where(u >= 0.0, far, near)
    return out if out.ndim else float(out)


def trunc_pdf(x, m, sigma, lo: float, hi: float):
    """Density of the truncated normal at x (0 outside [lo, hi])."""
    x = np.asarray(x, dtype=float)
    lm = log_mass(m, sigma, lo, hi)
    z = (x - m) / sigma
    logpdf = -0.5 * z * z - math.log(sigma) - 0.5 * math.log(2.0 * math.pi) - lm
    out = np.where((x >= lo) & (x <= hi), np.exp(logpdf), 0.0)
    return out if out.ndim else float(out)
