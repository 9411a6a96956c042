"""Multi-group extension: group-blind versus group-sighted impartial assessment.

Blind assessment pools the groups into one average agent, so its equilibria
are the single-agent ones at the population-weighted misspecification.
Sighted impartial assessment keeps per-group beliefs but forces a common
assessment intensity; for small misspecifications the joint belief map is a
contraction whose Jacobian is rank-one, which yields closed-form
Sherman-Morrison sensitivities and an explicit eigenvalue bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .best_response import BestResponseEngine
from .equilibrium import EquilibriumSet, find_equilibria, kl_divergence, kl_minimizer
from .errors import NumericalError
from .learning import (TransformedModel, TruncNormalPrior,
                       _as_transformed, _run_engine)
from .primitives import ModelPrimitives
from .rootfind import fd1

SCE_KL_TOL = 1e-12
FIXED_POINT_TOL = 1e-10
MAX_ITER = 500
LQ_PARAMETERS = ("lambda_e", "delta", "c", "kappa")


@dataclass(frozen=True)
class GroupPopulation:
    """J groups sharing primitives and support, with per-group truths.

    ``deltas`` are the per-group ability misspecifications; the template
    model's own mu_hat and beta_star are ignored.  Population weights must
    be positive and sum to one.
    """

    model: ModelPrimitives
    alphas: tuple[float, ...]
    deltas: tuple[float, ...]
    beta_stars: tuple[float, ...]
    mu_stars: tuple[float, ...] = ()

    def __post_init__(self):
        j = len(self.alphas)
        if not (len(self.deltas) == len(self.beta_stars) == j) or j < 1:
            raise ValueError("alphas, deltas, beta_stars must share a length >= 1")
        if any(a <= 0.0 for a in self.alphas) or abs(sum(self.alphas) - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to one")
        lo, hi = self.model.beta_lo, self.model.beta_hi
        if any(not lo < b < hi for b in self.beta_stars):
            raise ValueError("each group truth must lie inside the support")
        if not self.mu_stars:
            object.__setattr__(self, "mu_stars", tuple(0.0 for _ in self.alphas))
        elif len(self.mu_stars) != j:
            raise ValueError("mu_stars length mismatch")

    @property
    def size(self) -> int:
        return len(self.alphas)

    @property
    def delta_bar(self) -> float:
        """Population-weighted average misspecification."""
        return float(sum(a * d for a, d in zip(self.alphas, self.deltas)))

    def group_model(self, j: int) -> ModelPrimitives:
        m = self.model.with_beta_star(self.beta_stars[j])
        return m.with_delta_mu(self.deltas[j])


def color_blind_equilibria(pop: GroupPopulation) -> EquilibriumSet:
    """Equilibria when group identity is unobservable.

    All agents are assessed as average members, so the set coincides with
    the single-agent equilibria at misspecification delta_bar.  Requires a
    common group truth (pooling with heterogeneous truths has no
    single-agent counterpart).
    """
    if len(set(pop.beta_stars)) != 1:
        raise ValueError("blind assessment requires a common beta_star "
                         "across groups")
    model = pop.model.with_beta_star(pop.beta_stars[0]).with_delta_mu(pop.delta_bar)
    return find_equilibria(model)


@dataclass(frozen=True)
class MultigroupEquilibrium:
    """Fixed point of the joint belief map under a shared assessment."""

    beta_hat: np.ndarray
    h_hat: float
    sce_flags: tuple[bool, ...]
    g: np.ndarray            # per-group belief-map factors (rank-one Jacobian)
    grad_h: np.ndarray       # assessment gradient at the fixed point
    eigenvalues: np.ndarray  # spectrum of the fixed-point Jacobian minus identity
    residual: float
    iterations: int
    contraction_modulus: float
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    history: tuple = ()

    @property
    def in_domain(self) -> bool:
        return bool(np.all(self.beta_hat >= self.domain_lo - 1e-12)
                    and np.all(self.beta_hat <= self.domain_hi + 1e-12))


def _r_partials(eng: BestResponseEngine, h: float, beta: float):
    """(dR/dh, dR/dbeta) of effective effort."""
    model = eng.model
    if model.lq is not None and eng._closed:
        c = model.lq.c
        return beta * beta / c, 2.0 * h * beta / c
    r_h = fd1(lambda hh: eng.effective_effort(hh, beta), h, lo=0.0, hi=1.0)
    r_b = fd1(lambda bb: eng.effective_effort(h, bb), beta, lo=0.0)
    return r_h, r_b


def _grad_h(pop: GroupPopulation, eng: BestResponseEngine,
            betas: np.ndarray) -> np.ndarray:
    """Gradient of the shared assessment in the group beliefs."""
    model = pop.model
    alphas = np.asarray(pop.alphas)
    if model.lq is not None and eng._closed:
        lq = model.lq
        s = float(np.dot(alphas, betas ** 2))
        denom = (lq.lambda2 * s + lq.kappa * lq.c) ** 2
        return lq.lambda1 * lq.kappa * lq.c * 2.0 * alphas * betas / denom
    out = np.empty(pop.size)
    for j in range(pop.size):
        def h_of(bj, j=j):
            b = betas.copy()
            b[j] = bj
            return eng.assessment_multigroup(b, alphas)
        out[j] = fd1(h_of, float(betas[j]), lo=model.beta_lo)
    return out


def _g_factors(pop: GroupPopulation, eng: BestResponseEngine, h: float,
               betas: np.ndarray) -> np.ndarray:
    """Per-group factors g_j = (R_h(h, b*_j) - R_h(h, psi_j)) / R_b(h, psi_j)."""
    out = np.empty(pop.size)
    for j in range(pop.size):
        rh_star, _ = _r_partials(eng, h, pop.beta_stars[j])
        rh_psi, rb_psi = _r_partials(eng, h, float(betas[j]))
        out[j] = (rh_star - rh_psi) / rb_psi
    return out


def color_sighted_equilibrium(pop: GroupPopulation, tol: float = FIXED_POINT_TOL,
                              max_iter: int = MAX_ITER,
                              keep_history: bool = False) -> MultigroupEquilibrium:
    """Unique small-misspecification equilibrium by fixed-point iteration.

    Iterates the joint belief map from the truth vector; plain iteration is
    the contraction construction itself.  When the computed contraction
    modulus reaches one, iteration is damped by half and a warning is
    emitted (the small-misspecification guarantee no longer applies).
    """
    model = pop.model
    eng = BestResponseEngine(model)
    alphas = np.asarray(pop.alphas)
    betas = np.asarray(pop.beta_stars, dtype=float)
    warned = any(abs(d) > 0.1 * b for d, b in zip(pop.deltas, pop.beta_stars))
    if warned:
        warnings.warn("misspecifications are large relative to the group "
                      "truths; uniqueness/contraction is not guaranteed")

    lo = np.array([model.beta_lo if d > 0 else b
                   for d, b in zip(pop.deltas, pop.beta_stars)])
    hi = np.array([b if d > 0 else model.beta_hi
                   for d, b in zip(pop.deltas, pop.beta_stars)])

    history = [betas.copy()] if keep_history else []
    modulus = 0.0
    damping = 1.0
    residual = np.inf
    for it in range(1, max_iter + 1):
        h = float(eng.assessment_multigroup(betas, alphas))
        nxt = np.array([
            kl_minimizer(model.with_beta_star(pop.beta_stars[j]), h,
                         delta_mu=pop.deltas[j], engine=eng)
            for j in range(pop.size)])
        step_mod = float(np.linalg.norm(_g_factors(pop, eng, h, nxt))
                         * np.linalg.norm(_grad_h(pop, eng, nxt)))
        modulus = max(modulus, step_mod)
        if step_mod >= 1.0 and damping == 1.0:
            warnings.warn(f"contraction modulus {step_mod:.3g} >= 1; "
                          "falling back to damped iteration")
            damping = 0.5
        new = betas + damping * (nxt - betas)
        residual = float(np.max(np.abs(new - betas)))
        betas = new
        if keep_history:
            history.append(betas.copy())
        if residual < tol:
            break
    else:
        raise NumericalError(f"fixed-point iteration did not reach {tol:g} "
                             f"within {max_iter} steps (residual {residual:.3g})")

    h = float(eng.assessment_multigroup(betas, alphas))
    g = _g_factors(pop, eng, h, betas)
    gh = _grad_h(pop, eng, betas)
    shift = float(gh @ g)
    eigs = np.full(pop.size, -1.0)
    eigs[0] = -1.0 + shift
    sce = tuple(
        kl_divergence(model.with_beta_star(pop.beta_stars[j]), h,
                      float(betas[j]), delta_mu=pop.deltas[j],
                      engine=eng) <= SCE_KL_TOL
        for j in range(pop.size))
    return MultigroupEquilibrium(beta_hat=betas, h_hat=h, sce_flags=sce,
                                 g=g, grad_h=gh, eigenvalues=np.sort(eigs),
                                 residual=residual, iterations=it,
                                 contraction_modulus=modulus,
                                 domain_lo=lo, domain_hi=hi,
                                 history=tuple(history))


def sherman_morrison_inverse(u, v) -> np.ndarray:
    """Inverse of -I + u v^T.

    With A = -I the rank-one update formula reduces to
    -I - u v^T / (1 - v^T u); singular exactly when v^T u = 1.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    s = float(v @ u)
    if abs(1.0 - s) < 1e-14:
        raise np.linalg.LinAlgError("matrix -I + u v^T is singular (v^T u = 1)")
    j = u.size
    return -np.eye(j) - np.outer(u, v) / (1.0 - s)


def sensitivity(pop: GroupPopulation, eq: MultigroupEquilibrium,
                parameter: str) -> np.ndarray:
    """Derivative of the equilibrium belief vector in a model parameter.

    ``parameter`` is ``"delta_<j>"`` for group j's misspecification, or one
    of the LQ levers (lambda_e, delta, c, kappa), taken as the raw
    parameter.  Uses the rank-one inverse of the fixed-point Jacobian; no
    equilibrium recomputation is needed.
    """
    model = pop.model
    eng = BestResponseEngine(model)
    g, gh = eq.g, eq.grad_h
    s = float(gh @ g)
    if abs(1.0 - s) < 1e-10:
        raise NumericalError("fixed-point Jacobian is near singular")
    amplify = np.eye(pop.size) + np.outer(g, gh) / (1.0 - s)

    if parameter.startswith("delta_") and parameter[6:].isdigit():
        j = int(parameter[6:])
        if not 0 <= j < pop.size:
            raise ValueError(f"group index out of range in {parameter!r}")
        _, rb = _r_partials(eng, eq.h_hat, float(eq.beta_hat[j]))
        dpsi = np.zeros(pop.size)
        dpsi[j] = -1.0 / rb
        return amplify @ dpsi

    if parameter in LQ_PARAMETERS:
        from .analysis import perturb_model
        alphas = np.asarray(pop.alphas)
        step = 1e-6
        h_up = BestResponseEngine(perturb_model(model, parameter, step)) \
            .assessment_multigroup(eq.beta_hat, alphas)
        h_dn = BestResponseEngine(perturb_model(model, parameter, -step)) \
            .assessment_multigroup(eq.beta_hat, alphas)
        raw = getattr(model.lq, parameter)
        dh_dp = (h_up - h_dn) / (2.0 * step * raw)
        return dh_dp / (1.0 - s) * g

    raise ValueError(f"unknown parameter {parameter!r}")


@dataclass(frozen=True)
class EigenReport:
    eigenvalues: np.ndarray
    rank_one_shift: float     # the single eigenvalue moved off -1
    bound: float              # Bauer-Fike radius around -1
    bound_holds: bool
    all_negative: bool


def eigen_check(eq: MultigroupEquilibrium, dense_limit: int = 32) -> EigenReport:
    """Spectrum of the fixed-point Jacobian with the Bauer-Fike certificate.

    The Jacobian is -I + g grad_h^T, so the spectrum is -1 (multiplicity
    J-1) plus -1 + grad_h . g; every eigenvalue must lie within
    |g|_2 |grad_h|_2 of -1.
    """
    j = eq.g.size
    if j <= dense_limit:
        mat = -np.eye(j) + np.outer(eq.g, eq.grad_h)
        eigs = np.sort(np.linalg.eigvals(mat).real)
    else:
        eigs = np.full(j, -1.0)
        eigs[-1] = -1.0 + float(eq.grad_h @ eq.g)
        eigs = np.sort(eigs)
    bound = float(np.linalg.norm(eq.g) * np.linalg.norm(eq.grad_h))
    dev = float(np.max(np.abs(eigs + 1.0)))
    return EigenReport(eigenvalues=eigs,
                       rank_one_shift=-1.0 + float(eq.grad_h @ eq.g),
                       bound=bound,
                       bound_holds=dev <= bound + 1e-12,
                       all_negative=bool(np.all(eigs < 0.0)))


# -- learning under a shared assessment --------------------------------------


@dataclass(frozen=True)
class MultigroupTrajectory:
    """Per-group thinned learning paths with the shared assessment path."""

    periods: np.ndarray
    m: np.ndarray   # (T, J)
    xi: np.ndarray  # (T, J)
    h: np.ndarray   # (T,)
    x: np.ndarray   # (T, J)
    terminal_m: np.ndarray
    terminal_xi: np.ndarray
    equilibrium_m: np.ndarray
    distance_to_equilibrium: float


def _pop_engine_args(pop: GroupPopulation, tm: TransformedModel):
    return (np.asarray(pop.alphas), np.asarray(pop.beta_stars),
            np.asarray(pop.deltas), np.asarray(pop.mu_stars))


def simulate_multigroup(pop: GroupPopulation, horizon: int, seed: int,
                        run: int = 0,
                        prior: Optional[Sequence[Optional[TruncNormalPrior]]] = None,
                        stride: Optional[int] = None,
                        zero_noise: bool = False) -> MultigroupTrajectory:
    """Simulate the shared-assessment learning process for all groups.

    Each period the evaluator maximizes the population-weighted expected
    value under the groups' independent posteriors; outcomes are drawn
    independently per group.  With one group this reduces exactly (same
    noise streams, same arithmetic) to the single-agent simulator.
    """
    tm = _as_transformed(pop.model)
    alphas, bstars, deltas, mus = _pop_engine_args(pop, tm)
    if stride is None:
        stride = max(1, horizon // 1000)
    res = _run_engine(tm, alphas, bstars, deltas, mus, runs=run + 1,
                      horizon=horizon, seed=seed, prior=prior,
                      zero_noise=zero_noise, record_stride=stride,
                      record_run=run)
    eq = color_sighted_equilibrium(pop)
    eq_m = np.array([float(tm.g1(b)) for b in eq.beta_hat])
    term_m = res.m[run]
    dist = float(np.max(np.abs(np.clip(term_m, tm.m_lo, tm.m_hi)
                               - np.clip(eq_m, tm.m_lo, tm.m_hi))))
    return MultigroupTrajectory(periods=res.rec_n, m=res.rec_m, xi=res.rec_xi,
                                h=res.rec_h, x=res.rec_x,
                                terminal_m=term_m,
                                terminal_xi=res.s[run] / horizon,
                                equilibrium_m=eq_m,
                                distance_to_equilibrium=dist)


@dataclass(frozen=True)
class MultigroupConvergenceReport:
    equilibrium_m: np.ndarray
    distances: np.ndarray
    runs: int
    horizon: int
    radius: float
    seed: int

    @property
    def fraction_within(self) -> float:
        return float(np.mean(self.distances <= self.radius))


def monte_carlo_multigroup(pop: GroupPopulation, runs: int, horizon: int,
                           seed: int, radius: float = 0.05,
                           prior: Optional[Sequence[Optional[TruncNormalPrior]]] = None
                           ) -> MultigroupConvergenceReport:
    """Fraction of runs whose terminal belief vector lands near the equilibrium."""
    tm = _as_transformed(pop.model)
    alphas, bstars, deltas, mus = _pop_engine_args(pop, tm)
    res = _run_engine(tm, alphas, bstars, deltas, mus, runs=runs,
                      horizon=horizon, seed=seed, prior=prior)
    eq = color_sighted_equilibrium(pop)
    eq_m = np.array([float(tm.g1(b)) for b in eq.beta_hat])
    proj = np.clip(res.m, tm.m_lo, tm.m_hi)
    dists = np.max(np.abs(proj - np.clip(eq_m, tm.m_lo, tm.m_hi)[None, :]), axis=1)
    return MultigroupConvergenceReport(equilibrium_m=eq_m, distances=dists,
                                       runs=runs, horizon=horizon,
                                       radius=radius, seed=seed)
