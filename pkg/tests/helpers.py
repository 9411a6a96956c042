"""Independent oracles and instance generators for the test suite.

Everything here re-derives expected values from scratch (closed forms,
quadratics, dense scans) without calling into the package's solvers, so
tests compare two genuinely separate routes.
"""

from __future__ import annotations

import math

import numpy as np

from berklab import LQParams, ModelPrimitives, build_lq


def lq_assessment(lq: LQParams, beta: float) -> float:
    b2 = beta * beta
    return lq.lambda1 * b2 / (lq.lambda2 * b2 + lq.kappa * lq.c)


def lq_psi(model: ModelPrimitives, beta: float) -> float:
    """Closed-form belief map for LQ models, written independently."""
    lq = model.lq
    h = lq_assessment(lq, beta)
    val = model.beta_star ** 2 - model.delta_mu * lq.c / h
    val = max(val, model.beta_lo ** 2)
    return min(math.sqrt(val), model.beta_hi)


def lq_oracle_equilibria(model: ModelPrimitives) -> list[tuple[float, bool]]:
    """All equilibria of an LQ model from the fixed-point quadratic.

    In x = beta^2 the interior fixed points solve
    lambda1 x^2 - (lambda1 beta_star^2 - delta_mu c lambda2) x
    + delta_mu kappa c^2 = 0; support endpoints are equilibria when the
    clamped map pins there.  Stability comes from the crossing direction of
    the closed-form map, evaluated directly.
    """
    lq = model.lq
    dm = model.delta_mu
    lo, hi = model.beta_lo, model.beta_hi
    if dm == 0.0:
        return [(model.beta_star, True)]
    coeffs = [lq.lambda1,
              -(lq.lambda1 * model.beta_star ** 2 - dm * lq.c * lq.lambda2),
              dm * lq.kappa * lq.c ** 2]
    candidates = []
    for x in np.roots(coeffs):
        if abs(x.imag) < 1e-12 and x.real > 0.0:
            b = math.sqrt(x.real)
            if lo + 1e-12 < b < hi - 1e-12:
                candidates.append(b)
    if lq_psi(model, lo) <= lo:
        candidates.append(lo)
    if lq_psi(model, hi) >= hi:
        candidates.append(hi)

    out = []
    eps = 1e-7 * (hi - lo)
    for b in sorted(set(candidates)):
        left = lq_psi(model, max(b - eps, lo)) - max(b - eps, lo)
        right = lq_psi(model, min(b + eps, hi)) - min(b + eps, hi)
        if b <= lo + 1e-12:
            stable = right < 0.0
        elif b >= hi - 1e-12:
            stable = left > 0.0
        else:
            stable = left > 0.0 > right
        out.append((b, stable))
    return sorted(out, key=lambda t: -t[0])


def dense_scan_equilibria(model: ModelPrimitives, points: int = 10_000,
                          refine: int = 80) -> list[float]:
    """Grid sign scan plus bisection on the closed-form map (scan oracle)."""
    betas = np.linspace(model.beta_lo, model.beta_hi, points)
    d = np.array([lq_psi(model, float(b)) - float(b) for b in betas])
    roots = []
    if abs(d[0]) < 1e-13:
        roots.append(float(betas[0]))
    if abs(d[-1]) < 1e-13:
        roots.append(float(betas[-1]))
    for i in range(points - 1):
        if abs(d[i]) < 1e-13 or abs(d[i + 1]) < 1e-13:
            continue
        if d[i] * d[i + 1] < 0.0:
            lo, hi = float(betas[i]), float(betas[i + 1])
            for _ in range(refine):
                mid = 0.5 * (lo + hi)
                if (lq_psi(model, lo) - lo) * (lq_psi(model, mid) - mid) <= 0.0:
                    hi = mid
                else:
                    lo = mid
            roots.append(0.5 * (lo + hi))
    return sorted(roots)


def random_lq_instance(rng: np.random.Generator, delta_mu: float,
                       interior_margin: float = 1.2) -> ModelPrimitives:
    """Random admissible LQ instance; keeps assessment interior on the support."""
    c = float(rng.uniform(0.5, 2.0))
    lambda_e = float(rng.uniform(0.5, 2.0))
    lambda_a = float(rng.uniform(0.2, 1.0))
    delta = float(rng.uniform(0.1, 0.9))
    beta_star = float(rng.uniform(1.0, 3.0))
    beta_lo = beta_star * float(rng.uniform(0.15, 0.6))
    beta_hi = beta_star * float(rng.uniform(1.4, 2.5))
    lambda1 = lambda_e + delta * lambda_a
    # interiority: h(beta_hi) < 1 needs (lambda1 - lambda2) beta_hi^2 < kappa c
    kappa_min = max((lambda1 - lambda_a) * beta_hi ** 2 / c, 0.1)
    kappa = float(interior_margin * kappa_min * rng.uniform(1.0, 2.0))
    params = LQParams(c=c, kappa=kappa, lambda_e=lambda_e,
                      lambda_a=lambda_a, delta=delta)
    return build_lq(params, mu_star=0.0, beta_star=beta_star,
                    mu_hat=delta_mu, beta_lo=beta_lo, beta_hi=beta_hi)


def three_equilibria_model() -> ModelPrimitives:
    """The documented overestimation instance with a belief cascade corner."""
    params = LQParams(c=1.0, kappa=1.0, lambda_e=1.0, lambda_a=1.0, delta=0.0)
    return build_lq(params, mu_star=0.0, beta_star=2.0, mu_hat=0.5,
                    beta_lo=0.3, beta_hi=3.0)


def unique_equilibrium_model(delta_mu: float = -0.5) -> ModelPrimitives:
    params = LQParams(c=1.0, kappa=1.0, lambda_e=1.0, lambda_a=1.0, delta=0.0)
    return build_lq(params, mu_star=0.0, beta_star=2.0, mu_hat=delta_mu,
                    beta_lo=0.5, beta_hi=3.0)
