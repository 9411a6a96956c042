"""Best responses: agent effort, effective effort, and evaluator assessment.

LQ models use closed forms (vectorized over numpy arrays); general
primitives are solved from their first-order conditions by bracketed
Brent iteration.  The evaluator's condition uses the implicit-function
expression for the effort slope rather than differencing the solved
effort map, so root tolerances do not stack.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantViolation, NumericalError
from .primitives import ModelPrimitives
from .rootfind import fd1, fd2, solve_decreasing

H_EDGE = 1e-12  # open-interval margin for assessment brackets


class BestResponseEngine:
    """Optimal behavior maps for a fixed model.

    Pure and reentrant: no mutable state beyond cached constants, so one
    engine can be shared across threads.  ``force_numeric`` routes LQ
    models through the general solvers (used to validate them against the
    closed forms).
    """

    def __init__(self, model: ModelPrimitives, root_tol: float = 1e-10,
                 max_iter: int = 200, force_numeric: bool = False):
        self.model = model
        self.root_tol = root_tol
        self.max_iter = max_iter
        self._closed = model.lq is not None and not force_numeric
        if model.lq is not None and model.lq.lambda2 > 0.0:
            # beyond lambda1/lambda2 the evaluator's marginal value of
            # assessment is negative, so the search can stop there
            self._h_cap = min(1.0, model.lq.lambda1 / model.lq.lambda2)
        else:
            self._h_cap = 1.0

    # -- agent ----------------------------------------------------------

    def effort(self, h, beta):
        """Maximizer of h*r(a, beta) - c(a); zero when h or beta is zero."""
        if self._closed:
            lq = self.model.lq
            return h * beta / lq.c
        return self._effort_numeric(float(h), float(beta))

    def _effort_numeric(self, h: float, beta: float) -> float:
        if h <= 0.0 or beta <= 0.0:
            return 0.0
        m = self.model

        def foc(a):
            return h * fd1(lambda x: m.r(x, beta), a, lo=0.0) - fd1(m.cost, a, lo=0.0)

        try:
            return solve_decreasing(foc, 0.0, 1.0, expand=True)
        except NumericalError as exc:
            raise NumericalError(
                f"effort bracket failed at h={h}, beta={beta}: {exc}") from exc

    def effective_effort(self, h, beta):
        """R(h, beta) = r(a(h, beta), beta)."""
        if self._closed:
            lq = self.model.lq
            return h * beta * beta / lq.c
        a = self.effort(h, beta)
        return self.model.r(a, float(beta))

    def effort_sensitivities(self, h: float, beta: float) -> tuple[float, float]:
        """(da/dh, da/dbeta) from the implicit function theorem at a(h, beta)."""
        if self._closed:
            lq = self.model.lq
            return beta / lq.c, h / lq.c
        m = self.model
        a = self._effort_numeric(h, beta)
        r_a = fd1(lambda x: m.r(x, beta), a, lo=0.0)
        r_aa = fd2(lambda x: m.r(x, beta), a, lo=0.0)
        r_ab = fd1(lambda b: fd1(lambda x: m.r(x, b), a, lo=0.0), beta, lo=0.0)
        c2 = fd2(m.cost, a, lo=0.0)
        denom = c2 - h * r_aa
        if denom <= 0.0:
            raise InvariantViolation(
                "second-order condition failed: c'' - h r_aa <= 0")
        return r_a / denom, h * r_ab / denom

    # -- evaluator ------------------------------------------------------

    def evaluator_value(self, h, beta):
        """V_E(h, beta) = v_e(a(h, beta), beta)."""
        if self._closed:
            lq = self.model.lq
            a = h * beta / lq.c
            return lq.lambda1 * beta * a - 0.5 * lq.lambda2 * lq.c * a * a
        return self.model.v_e(self.effort(h, beta), float(beta))

    def _dv_dh(self, h: float, beta: float) -> float:
        """Marginal evaluator value of assessment, dV_E/dh."""
        m = self.model
        a = self._effort_numeric(h, beta)
        da_dh, _ = self.effort_sensitivities(h, beta)
        v_a = fd1(lambda x: m.v_e(x, beta), a, lo=0.0)
        return v_a * da_dh

    def assessment(self, beta):
        """Evaluator's optimal h given a degenerate belief at beta."""
        if self._closed:
            lq = self.model.lq
            b2 = beta * beta
            h = lq.lambda1 * b2 / (lq.lambda2 * b2 + lq.kappa * lq.c)
            self._require_interior(h, beta)
            return h
        return self._assessment_numeric([(1.0, float(beta))])

    def assessment_multigroup(self, betas, weights):
        """Optimal shared h for a weighted population of productivities."""
        betas = np.asarray(betas, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if betas.shape != weights.shape:
            raise ValueError("betas and weights must have matching shapes")
        if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to one")
        if np.any(betas <= 0.0):
            raise ValueError("all productivities must be positive")
        if self._closed:
            lq = self.model.lq
            s = float(np.dot(weights, betas ** 2))
            h = lq.lambda1 * s / (lq.lambda2 * s + lq.kappa * lq.c)
            self._require_interior(h, betas)
            return h
        return self._assessment_numeric(list(zip(weights.tolist(), betas.tolist())))

    def _assessment_numeric(self, weighted: list[tuple[float, float]]) -> float:
        m = self.model
        if all(b <= 0.0 for _, b in weighted):
            return 0.0

        def foc(h):
            marginal = sum(w * self._dv_dh(h, b) for w, b in weighted if b > 0.0)
            return marginal - fd1(m.assess_cost, h, lo=0.0, hi=1.0)

        hi = self._h_cap - H_EDGE
        try:
            h = solve_decreasing(foc, H_EDGE, hi)
        except NumericalError as exc:
            raise InvariantViolation(
                f"assessment is not interior on (0, {self._h_cap}): {exc}") from exc
        self._require_interior(h, [b for _, b in weighted])
        return h

    def _require_interior(self, h, beta) -> None:
        if np.any(np.asarray(h) <= 0.0) or np.any(np.asarray(h) >= 1.0):
            raise InvariantViolation(
                f"assessment {h!r} at beta={beta!r} is not interior to (0, 1); "
                "primitives violate the interiority assumption")

    # -- support-level constants -----------------------------------------

    def assessment_bounds(self) -> tuple[float, float]:
        """(h(beta_lo), h(beta_hi)): the range assessment takes on the support."""
        return (float(self.assessment(self.model.beta_lo)),
                float(self.assessment(self.model.beta_hi)))
