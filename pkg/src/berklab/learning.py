"""Infinite-horizon misspecified Bayesian learning dynamics.

Under the multiplicative structure R(h, beta) = g1(beta) g2(h) + g3(h),
posteriors over the transformed productivity g1(beta) stay exactly
truncated normal for uniform (or truncated-normal) priors, parameterized
by mode m and time-scaled precision xi.  The pair follows a stochastic
difference system whose limiting ODE has steady states in one-to-one
correspondence with the steady-state equilibria: sinks are the stable
ones, saddles the unstable ones, and simulated paths select the sinks.

All learning-state quantities (m, xi, priors, classification radii) live
in transformed units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .best_response import BestResponseEngine
from .equilibrium import DEFAULT_GRID, find_equilibria
from .errors import NumericalError
from .primitives import ModelPrimitives
from .rootfind import fd1, solve_decreasing
from .truncnorm import trunc_mean, trunc_pdf

CHUNK = 8192
SEED_MASK = (1 << 64) - 1
QUAD_NODES = 64
QUAD_NODES_MAX = 512
QUAD_RTOL = 1e-8
WINDOW_SIGMAS = 8.0
DEFAULT_RADIUS = 0.05


def _vec(f, x):
    """Apply a scalar-or-array callable to an array."""
    try:
        out = np.asarray(f(x), dtype=float)
        if out.shape == np.shape(x):
            return out
    except (TypeError, ValueError):
        pass
    return np.array([f(float(v)) for v in np.asarray(x).ravel()]).reshape(np.shape(x))


@dataclass(frozen=True)
class TransformedModel:
    """Certified factorization of effective effort plus derived constants."""

    model: ModelPrimitives
    g1: Callable
    g2: Callable
    g3: Callable
    g1_inv: Callable
    m_lo: float
    m_hi: float
    h_lo: float
    h_hi: float
    is_lq: bool
    recon_error: float
    engine: BestResponseEngine

    def fisher(self, h):
        g2h = _vec(self.g2, h) if np.ndim(h) else float(self.g2(h))
        return g2h * g2h * h

    def psi_unconstrained(self, h, delta_mu: float | None = None):
        """Best-fit transformed productivity at assessment h (always exists)."""
        dm = self.model.delta_mu if delta_mu is None else delta_mu
        g2h = _vec(self.g2, h) if np.ndim(h) else float(self.g2(h))
        return self.g1(self.model.beta_star) - dm / g2h

    def steady_assessment(self, m_proj):
        """Assessment map evaluated at the belief g1_inv(m_proj)."""
        return self.engine.assessment(self.g1_inv(m_proj))


def transform(model: ModelPrimitives, grid: int = 64,
              tol: float = 1e-10) -> TransformedModel:
    """Certify the factorization R = g1 g2 + g3 on a grid and package it.

    Refuses to proceed when the reconstruction error exceeds ``tol``:
    without the structure, posteriors lose their truncated-normal form and
    the simulation would silently be wrong.
    """
    fac = model.factorization
    if fac is None:
        raise NumericalError(
            "no effective-effort factorization supplied; learning requires "
            "R(h, beta) = g1(beta) g2(h) + g3(h)")
    eng = BestResponseEngine(model)
    h_lo, h_hi = eng.assessment_bounds()
    hs = np.linspace(h_lo, h_hi, grid)
    betas = np.linspace(model.beta_lo, model.beta_hi, grid)
    err = 0.0
    for h in hs:
        rec = _vec(fac.g1, betas) * float(fac.g2(h)) + float(fac.g3(h))
        direct = np.array([eng.effective_effort(float(h), float(b)) for b in betas])
        err = max(err, float(np.max(np.abs(rec - direct))))
    if err > tol:
        raise NumericalError(
            f"factorization reconstruction error {err:.3e} exceeds {tol:.1e}; "
            "the multiplicative structure does not hold for these primitives")
    return TransformedModel(
        model=model, g1=fac.g1, g2=fac.g2, g3=fac.g3, g1_inv=fac.g1_inv,
        m_lo=float(fac.g1(model.beta_lo)), m_hi=float(fac.g1(model.beta_hi)),
        h_lo=h_lo, h_hi=h_hi, is_lq=model.lq is not None, recon_error=err,
        engine=eng)


def _as_transformed(model) -> TransformedModel:
    return model if isinstance(model, TransformedModel) else transform(model)


def fisher_information(tm: TransformedModel, h: float):
    """Per-period informativeness of the outcome: I(h) = g2(h)^2 h."""
    return tm.fisher(h)


# -- exact posterior -------------------------------------------------------


def posterior_params(tm: TransformedModel, history) -> tuple[float, float]:
    """Mode and variance of the transformed posterior after ``history``.

    Batch form under a uniform prior: the mode is the Fisher-weighted
    average of per-period signals, the precision is the summed Fisher
    information.
    """
    hs = np.asarray([h for h, _ in history], dtype=float)
    xs = np.asarray([x for _, x in history], dtype=float)
    g2h = _vec(tm.g2, hs)
    g3h = _vec(tm.g3, hs)
    info = g2h * g2h * hs
    total = float(info.sum())
    if total <= 0.0:
        raise ValueError("history carries no information")
    num = float(((xs - tm.model.mu_hat - g3h) * hs * g2h).sum())
    return num / total, 1.0 / total


def posterior_exact_density(tm: TransformedModel, history, points,
                            quad_nodes: int = 256):
    """Posterior density over transformed productivity by direct Bayes.

    Evaluates the Gaussian-product kernel in log space and normalizes with
    Gauss-Legendre quadrature over the support; assumes a uniform prior,
    for which this is exact.  An empty history returns the uniform density.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    lo, hi = tm.m_lo, tm.m_hi
    if len(history) == 0:
        out = np.full(pts.shape, 1.0 / (hi - lo))
        return out if np.ndim(points) else float(out[0])
    hs = np.asarray([h for h, _ in history], dtype=float)
    xs = np.asarray([x for _, x in history], dtype=float)
    g2h = _vec(tm.g2, hs)
    g3h = _vec(tm.g3, hs)
    resid0 = xs - tm.model.mu_hat - g3h

    def log_kernel(b):
        diff = resid0[None, :] - np.outer(b, g2h)
        return -0.5 * (diff * diff * hs[None, :]).sum(axis=1)

    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    nodes = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * weights
    lk_nodes = log_kernel(nodes)
    lk_pts = log_kernel(pts)
    peak = max(float(lk_nodes.max()), float(lk_pts.max()))
    z = float((weights * np.exp(lk_nodes - peak)).sum())
    out = np.exp(lk_pts - peak) / z
    return out if np.ndim(points) else float(out[0])


# -- prior and state -------------------------------------------------------


@dataclass(frozen=True)
class TruncNormalPrior:
    """Truncated-normal prior over transformed productivity."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise ValueError("prior sd must be positive")

    @property
    def precision(self) -> float:
        return 1.0 / (self.sd * self.sd)


@dataclass(frozen=True)
class LearningState:
    """Posterior state after period n: mode m and scaled precision xi = 1/(n v)."""

    n: int
    m: float
    xi: float
    seed: int = 0
    run: int = 0

    @property
    def total_precision(self) -> float:
        return self.n * self.xi


def evaluator_step(tm: TransformedModel, state: LearningState,
                   prior: Optional[TruncNormalPrior] = None) -> float:
    """Next-period assessment given the current posterior state.

    Maximizes the posterior expectation of the evaluator's value net of
    assessment cost; ``state.n == 0`` means no data, in which case the
    prior (uniform by default) is used.
    """
    if state.n == 0:
        if prior is None:
            m, s = 0.0, 0.0
        else:
            m, s = prior.mean, prior.precision
    else:
        m, s = state.m, state.n * state.xi
        if prior is not None:
            s += prior.precision
            m = (prior.precision * prior.mean + state.n * state.xi * state.m) / s
    h = _shared_assessment(tm, np.array([1.0]), np.array([m]), np.array([s]))
    return float(np.clip(h[0], tm.h_lo, tm.h_hi))


def _posterior_means(tm: TransformedModel, m: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Truncated-posterior means; zero-precision entries fall back to uniform."""
    mid = 0.5 * (tm.m_lo + tm.m_hi)
    sigma = 1.0 / np.sqrt(np.maximum(s, 1e-300))
    nu = trunc_mean(m, sigma, tm.m_lo, tm.m_hi)
    return np.where(s > 0.0, nu, mid)


def _shared_assessment(tm: TransformedModel, alphas: np.ndarray,
                       m, s) -> np.ndarray:
    """Optimal common assessment for population posteriors, vectorized over runs.

    ``m`` and ``s`` have shape (runs, groups); returns shape (runs,).
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    s = np.atleast_2d(np.asarray(s, dtype=float))
    if tm.is_lq:
        lq = tm.model.lq
        nu = _posterior_means(tm, m, s)
        nu_bar = nu @ alphas
        return lq.lambda1 * nu_bar / (lq.lambda2 * nu_bar + lq.kappa * lq.c)
    return np.array([_quadrature_assessment(tm, alphas, m[k], s[k])
                     for k in range(m.shape[0])])


def _group_quadrature(tm: TransformedModel, m: float, s: float, nodes: int):
    """Normalized quadrature nodes/weights against one group's posterior."""
    lo, hi = tm.m_lo, tm.m_hi
    x, w = np.polynomial.legendre.leggauss(nodes)
    if s <= 0.0:
        lo_w, hi_w = lo, hi
        pdf = np.full(nodes, 1.0)
    else:
        sigma = 1.0 / math.sqrt(s)
        lo_w = max(lo, m - WINDOW_SIGMAS * sigma)
        hi_w = min(hi, m + WINDOW_SIGMAS * sigma)
        if hi_w <= lo_w:
            # mode far outside: the truncated mass decays from the nearest
            # endpoint with scale sigma^2 / distance
            if m < lo:
                scale = sigma * sigma / (lo - m)
                lo_w, hi_w = lo, min(hi, lo + 40.0 * scale + 1e-12 * (hi - lo))
            else:
                scale = sigma * sigma / (m - hi)
                lo_w, hi_w = max(lo, hi - 40.0 * scale - 1e-12 * (hi - lo)), hi
        pdf = None
    pts = 0.5 * (hi_w - lo_w) * x + 0.5 * (hi_w + lo_w)
    wts = 0.5 * (hi_w - lo_w) * w
    if pdf is None:
        pdf = trunc_pdf(pts, m, 1.0 / math.sqrt(s), lo, hi)
    raw = wts * pdf
    total = raw.sum()
    if total <= 0.0:
        raise NumericalError("posterior quadrature weights vanished")
    return pts, raw / total


def _quadrature_assessment(tm: TransformedModel, alphas, m_vec, s_vec) -> float:
    """General-primitives path: maximize the posterior-expected value by FOC."""
    eng = tm.engine
    kap = tm.model.assess_cost
    prev = None
    nodes = QUAD_NODES
    while True:
        groups = [_group_quadrature(tm, float(mj), float(sj), nodes)
                  for mj, sj in zip(m_vec, s_vec)]
        betas = [[float(tm.g1_inv(p)) for p in pts] for pts, _ in groups]

        def foc(h):
            total = 0.0
            for alpha, (pts, wts), bs in zip(alphas, groups, betas):
                total += alpha * sum(w * eng._dv_dh(h, b)
                                     for w, b in zip(wts, bs))
            return total - fd1(kap, h, lo=0.0, hi=1.0)

        h = solve_decreasing(foc, 1e-12, 1.0 - 1e-12)
        if prev is not None and abs(h - prev) <= QUAD_RTOL:
            return h
        if nodes >= QUAD_NODES_MAX:
            raise NumericalError(
                f"assessment quadrature did not settle below {QUAD_RTOL:g} "
                f"with {nodes} nodes")
        prev, nodes = h, 2 * nodes


# -- simulation engine ------------------------------------------------------


def noise_stream(seed: int, run: int, group: int = 0):
    """Counter-based generator for the (seed, run, group) stream.

    Streams are independent across (run, group) and reproducible regardless
    of execution order; the period index is the position in the stream.
    """
    key = [seed & SEED_MASK, ((run & 0xFFFFFFFF) << 32) | (group & 0xFFFFFFFF)]
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class _RunResult:
    m: np.ndarray        # (runs, groups) terminal modes
    s: np.ndarray        # (runs, groups) terminal total precisions
    rec_n: np.ndarray
    rec_m: np.ndarray    # (T, groups) for the recorded run
    rec_xi: np.ndarray
    rec_h: np.ndarray
    rec_x: np.ndarray


def _run_engine(tm: TransformedModel, alphas: np.ndarray,
                beta_stars: np.ndarray, deltas: np.ndarray,
                mu_stars: np.ndarray, runs: int, horizon: int, seed: int,
                prior: Optional[Sequence[Optional[TruncNormalPrior]]] = None,
                zero_noise: bool = False, clip_noise: bool = False,
                record_stride: int = 0, record_run: int = 0) -> _RunResult:
    """Advance all runs in lockstep for ``horizon`` periods."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    groups = len(alphas)
    bstar_t = np.array([float(tm.g1(b)) for b in beta_stars])
    mu_hats = mu_stars + deltas

    m = np.zeros((runs, groups))
    s = np.zeros((runs, groups))
    if prior is not None:
        for j, pj in enumerate(prior):
            if pj is not None:
                m[:, j] = pj.mean
                s[:, j] = pj.precision

    gens = [[noise_stream(seed, k, j) for j in range(groups)]
            for k in range(runs)]

    rec_n, rec_m, rec_xi, rec_h, rec_x = [], [], [], [], []
    n = 0
    remaining = horizon
    while remaining > 0:
        block = min(CHUNK, remaining)
        eps = np.empty((block, runs, groups))
        for k in range(runs):
            for j in range(groups):
                eps[:, k, j] = gens[k][j].standard_normal(block)
        for t in range(block):
            n += 1
            e = eps[t]
            if zero_noise:
                e = np.zeros_like(e)
            elif clip_noise:
                bound = math.sqrt(2.0 * math.log(max(n, 2)))
                e = np.clip(e, -bound, bound)
            h = _shared_assessment(tm, alphas, m, s)
            h = np.clip(h, tm.h_lo, tm.h_hi)
            g2h = _vec(tm.g2, h)
            g3h = _vec(tm.g3, h)
            info = g2h * g2h * h
            r_star = bstar_t[None, :] * g2h[:, None] + g3h[:, None]
            x = mu_stars[None, :] + r_star + e / np.sqrt(h)[:, None]
            contrib = (x - mu_hats[None, :] - g3h[:, None]) * (h * g2h)[:, None]
            s_new = s + info[:, None]
            m = (s * m + contrib) / s_new
            s = s_new
            if record_stride and (n % record_stride == 0 or n == 1 or n == horizon):
                rec_n.append(n)
                rec_m.append(m[record_run].copy())
                rec_xi.append(s[record_run] / n)
                rec_h.append(float(h[record_run]))
                rec_x.append(x[record_run].copy())
        remaining -= block

    return _RunResult(m=m, s=s,
                      rec_n=np.array(rec_n, dtype=int),
                      rec_m=np.array(rec_m), rec_xi=np.array(rec_xi),
                      rec_h=np.array(rec_h), rec_x=np.array(rec_x))


def _single_group_args(tm: TransformedModel):
    mdl = tm.model
    return (np.array([1.0]), np.array([mdl.beta_star]),
            np.array([mdl.delta_mu]), np.array([mdl.mu_star]))


@dataclass(frozen=True)
class Trajectory:
    """Thinned samples of one learning path plus its terminal classification."""

    periods: np.ndarray
    m: np.ndarray
    xi: np.ndarray
    h: np.ndarray
    x: np.ndarray
    terminal: LearningState
    steady_states: tuple
    nearest_index: int
    nearest_distance: float


def simulate(model, horizon: int, seed: int, run: int = 0,
             prior: Optional[TruncNormalPrior] = None,
             stride: Optional[int] = None, zero_noise: bool = False,
             clip_noise: bool = False,
             grid_points: int = DEFAULT_GRID) -> Trajectory:
    """Simulate one learning path and classify its terminal belief.

    Per period: the evaluator best-responds to the posterior, an outcome is
    drawn under the truth, and the exact truncated-normal recursion updates
    (m, xi).  Distances are measured between support-projected modes, i.e.
    in belief space.
    """
    tm = _as_transformed(model)
    alphas, bstars, deltas, mus = _single_group_args(tm)
    if stride is None:
        stride = max(1, horizon // 1000)
    res = _run_engine(tm, alphas, bstars, deltas, mus, runs=run + 1,
                      horizon=horizon, seed=seed,
                      prior=[prior], zero_noise=zero_noise,
                      clip_noise=clip_noise, record_stride=stride,
                      record_run=run)
    ode = limiting_ode(tm, grid_points=grid_points)
    m_term = float(res.m[run, 0])
    xi_term = float(res.s[run, 0]) / horizon
    proj = np.clip(m_term, tm.m_lo, tm.m_hi)
    dists = [abs(proj - np.clip(ss.m, tm.m_lo, tm.m_hi))
             for ss in ode.steady_states]
    idx = int(np.argmin(dists))
    return Trajectory(periods=res.rec_n, m=res.rec_m[:, 0], xi=res.rec_xi[:, 0],
                      h=res.rec_h, x=res.rec_x[:, 0],
                      terminal=LearningState(n=horizon, m=m_term, xi=xi_term,
                                             seed=seed, run=run),
                      steady_states=ode.steady_states,
                      nearest_index=idx, nearest_distance=float(dists[idx]))


# -- limiting ODE -----------------------------------------------------------


@dataclass(frozen=True)
class SteadyState:
    m: float
    xi: float
    kind: str  # "sink" | "saddle"
    eigenvalues: tuple[float, float]
    beta: float  # g1_inv of the projected mode

    @property
    def is_sink(self) -> bool:
        return self.kind == "sink"


@dataclass(frozen=True)
class OdeSystem:
    """Limiting mean dynamics of the posterior state theta = (m, xi)."""

    tm: TransformedModel
    steady_states: tuple[SteadyState, ...]

    def field(self, theta) -> np.ndarray:
        m, xi = float(theta[0]), float(theta[1])
        mt = min(max(m, self.tm.m_lo), self.tm.m_hi)
        h = float(self.tm.steady_assessment(mt))
        info = float(self.tm.fisher(h))
        psi = float(self.tm.psi_unconstrained(h))
        return np.array([info * (psi - m) / xi, info - xi])

    def nullcline(self, m):
        """xi value with zero xi-drift at each m."""
        m = np.atleast_1d(np.asarray(m, dtype=float))
        out = np.empty_like(m)
        for i, mi in enumerate(m):
            mt = min(max(float(mi), self.tm.m_lo), self.tm.m_hi)
            out[i] = float(self.tm.fisher(self.tm.steady_assessment(mt)))
        return out if out.size > 1 else float(out[0])

    def integrate(self, theta0, total_time: float,
                  max_step: float = 0.05) -> np.ndarray:
        """Explicit Euler with step bounded by 0.1 / |F|."""
        theta = np.asarray(theta0, dtype=float).copy()
        t = 0.0
        while t < total_time:
            f = self.field(theta)
            norm = float(np.linalg.norm(f))
            dt = min(max_step, 0.1 / max(norm, 1e-12), total_time - t)
            theta = theta + dt * f
            t += dt
        return theta


def limiting_ode(model, grid_points: int = DEFAULT_GRID) -> OdeSystem:
    """Build the limiting ODE and its classified steady states.

    Steady states are the equilibrium beliefs mapped through g1; modes
    pinned at the lower support edge map to the unconstrained best fit at
    that edge (a sink below the support).  Interior eigenvalues are
    (slope - 1, -1), with slope the transformed belief-map derivative.
    """
    tm = _as_transformed(model)
    mdl = tm.model
    eqs = find_equilibria(mdl, engine=tm.engine, grid_points=grid_points)

    def psi_breve(mt: float) -> float:
        return float(tm.psi_unconstrained(tm.steady_assessment(mt)))

    states = []
    tol = 1e-9
    for p in eqs.points:
        h = float(tm.engine.assessment(p.beta_hat))
        info = float(tm.fisher(h))
        if mdl.beta_lo + tol < p.beta_hat < mdl.beta_hi - tol:
            m_hat = float(tm.g1(p.beta_hat))
            step = 1e-6 * max(1.0, abs(m_hat))
            lo = max(tm.m_lo, m_hat - step)
            hi = min(tm.m_hi, m_hat + step)
            slope = (psi_breve(hi) - psi_breve(lo)) / (hi - lo)
            eig = (slope - 1.0, -1.0)
            kind = "sink" if eig[0] < 0.0 else "saddle"
        else:
            edge = tm.m_lo if p.beta_hat <= mdl.beta_lo + tol else tm.m_hi
            m_hat = psi_breve(edge)
            eig = (-1.0, -1.0)
            kind = "sink"
        states.append(SteadyState(m=m_hat, xi=info, kind=kind,
                                  eigenvalues=eig, beta=p.beta_hat))
    return OdeSystem(tm=tm, steady_states=tuple(states))


@dataclass(frozen=True)
class PhaseField:
    m: np.ndarray
    xi: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    nullcline: np.ndarray


def phase_field(model, m_values=None, xi_values=None, grid: int = 200,
                grid_points: int = DEFAULT_GRID) -> PhaseField:
    """Evaluate the ODE field on a rectangular (m, xi) grid for plotting."""
    tm = _as_transformed(model)
    ode = limiting_ode(tm, grid_points=grid_points)
    if m_values is None:
        lo = min([tm.m_lo] + [ss.m for ss in ode.steady_states])
        span = tm.m_hi - lo
        m_values = np.linspace(lo - 0.05 * span, tm.m_hi + 0.05 * span, grid)
    if xi_values is None:
        i_lo = float(tm.fisher(tm.h_lo))
        i_hi = float(tm.fisher(tm.h_hi))
        pad = 0.2 * (i_hi - i_lo)
        xi_values = np.linspace(max(i_lo - pad, 1e-9 + 0.0), i_hi + pad, grid)
    m_values = np.asarray(m_values, dtype=float)
    xi_values = np.asarray(xi_values, dtype=float)
    f1 = np.empty((xi_values.size, m_values.size))
    f2 = np.empty_like(f1)
    null = np.empty(m_values.size)
    for jm, mv in enumerate(m_values):
        mt = min(max(float(mv), tm.m_lo), tm.m_hi)
        h = float(tm.steady_assessment(mt))
        info = float(tm.fisher(h))
        psi = float(tm.psi_unconstrained(h))
        null[jm] = info
        f1[:, jm] = info * (psi - mv) / xi_values
        f2[:, jm] = info - xi_values
    return PhaseField(m=m_values, xi=xi_values, f1=f1, f2=f2, nullcline=null)


# -- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceReport:
    """Terminal classification frequencies over independent runs."""

    steady_states: tuple[SteadyState, ...]
    counts: tuple[int, ...]
    unclassified: int
    runs: int
    horizon: int
    radius: float
    seed: int

    @property
    def frequencies(self) -> tuple[float, ...]:
        return tuple(c / self.runs for c in self.counts)

    @property
    def sink_fraction(self) -> float:
        return sum(c for c, ss in zip(self.counts, self.steady_states)
                   if ss.is_sink) / self.runs

    @property
    def saddle_hits(self) -> int:
        return sum(c for c, ss in zip(self.counts, self.steady_states)
                   if not ss.is_sink)


def monte_carlo_convergence(model, runs: int, horizon: int, seed: int,
                            radius: float = DEFAULT_RADIUS,
                            prior: Optional[TruncNormalPrior] = None,
                            zero_noise: bool = False,
                            grid_points: int = DEFAULT_GRID) -> ConvergenceReport:
    """Run independent learning paths and classify their terminal beliefs.

    Each terminal mode is projected onto the support and assigned to the
    nearest steady state within ``radius`` (transformed units); runs
    farther than that from every steady state count as unclassified.
    """
    tm = _as_transformed(model)
    alphas, bstars, deltas, mus = _single_group_args(tm)
    res = _run_engine(tm, alphas, bstars, deltas, mus, runs=runs,
                      horizon=horizon, seed=seed, prior=[prior],
                      zero_noise=zero_noise)
    ode = limiting_ode(tm, grid_points=grid_points)
    targets = np.array([np.clip(ss.m, tm.m_lo, tm.m_hi)
                        for ss in ode.steady_states])
    proj = np.clip(res.m[:, 0], tm.m_lo, tm.m_hi)
    dists = np.abs(proj[:, None] - targets[None, :])
    nearest = np.argmin(dists, axis=1)
    within = dists[np.arange(runs), nearest] <= radius
    counts = [int(np.sum((nearest == i) & within))
              for i in range(len(ode.steady_states))]
    return ConvergenceReport(steady_states=ode.steady_states,
                             counts=tuple(counts),
                             unclassified=int(np.sum(~within)),
                             runs=runs, horizon=horizon, radius=radius,
                             seed=seed)
