"""Augmented-Lagrangian minimisation of a diagonal quadratic form under
power-moment constraints, in coefficient space.

Problem::

    minimise    sum_k sigma_k c_k^2
    subject to  avg(G_i |u|^q) = target_i,    u = B c at the grid nodes.

The inner problem is solved by Newton's method with an Armijo line search;
the Hessian is shifted along diag(sigma) whenever it is not positive
definite.  The penalty parameter grows tenfold per outer iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, null_space

log = logging.getLogger(__name__)

__all__ = ["ALResult", "MomentProblem", "minimize_constrained"]


@dataclass
class ALResult:
    coeffs: np.ndarray
    multipliers: np.ndarray
    energy: float
    violation: float
    grad_norm: float
    converged: bool
    outer_iters: int
    inner_iters: int
    message: str = ""


class MomentProblem:
    """Objective, constraints and their derivatives for fixed grid data."""

    def __init__(self, B, w, sigma, G, targets, q: float):
        self.B = np.asarray(B, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.targets = np.asarray(targets, dtype=float)
        self.q = float(q)
        self.wG = self.G * self.w[None, :]

    def energy(self, c) -> float:
        return float(np.sum(self.sigma * c * c))

    def constraints(self, c) -> np.ndarray:
        u = self.B @ c
        return self.wG @ np.abs(u) ** self.q - self.targets

    def jacobian(self, c) -> np.ndarray:
        u = self.B @ c
        return self.q * (self.wG * (np.abs(u) ** (self.q - 2.0) * u)[None, :]) @ self.B

    def constraint_hessian(self, c, y) -> np.ndarray:
        """sum_i y_i * Hess h_i."""
        u = self.B @ c
        d = self.q * (self.q - 1.0) * np.abs(u) ** (self.q - 2.0) * (y @ self.wG)
        return self.B.T @ (d[:, None] * self.B)

    def lagrangian_hessian(self, c, mu) -> np.ndarray:
        return np.diag(2.0 * self.sigma) - self.constraint_hessian(c, mu)

    def multiplier_estimate(self, c) -> np.ndarray:
        J = self.jacobian(c)
        g = 2.0 * self.sigma * c
        mu, *_ = np.linalg.lstsq(J.T, g, rcond=None)
        return mu

    def tangent_min_eigenvalue(self, c, mu) -> float:
        """Smallest eigenvalue of the Lagrangian Hessian on the constraint tangent space."""
        Z = null_space(self.jacobian(c))
        H = self.lagrangian_hessian(c, mu)
        return float(np.linalg.eigvalsh(Z.T @ H @ Z)[0])


def _newton_direction(H, g, sigma):
    shift = 0.0
    scale = 2.0 * sigma
    for _ in range(30):
        try:
            fac = cho_factor(H + shift * np.diag(scale))
            return -cho_solve(fac, g), shift
        except LinAlgError:
            shift = 1e-8 if shift == 0.0 else shift * 10.0
    raise LinAlgError("could not make the Newton system positive definite")


def minimize_constrained(
    prob: MomentProblem,
    c0,
    mu0=None,
    tol: float = 1e-10,
    feas_tol: float = 1e-12,
    max_outer: int = 25,
    max_inner: int = 60,
    rho0: float | None = None,
    rho_max: float = 1e10,
) -> ALResult:
    c = np.array(c0, dtype=float)
    mu = prob.multiplier_estimate(c) if mu0 is None else np.array(mu0, dtype=float)
    scale = max(prob.energy(c), 1e-300)
    rho = 10.0 * scale if rho0 is None else float(rho0)
    inv2s = 1.0 / (2.0 * prob.sigma)
    total_inner = 0
    gnorm = np.inf
    h = prob.constraints(c)

    def merit(cc):
        hh = prob.constraints(cc)
        return prob.energy(cc) - mu @ hh + 0.5 * rho * hh @ hh

    best = None
    prev_viol = np.inf
    for outer in range(1, max_outer + 1):
        for _ in range(max_inner):
            total_inner += 1
            h = prob.constraints(c)
            J = prob.jacobian(c)
            y = mu - rho * h
            g = 2.0 * prob.sigma * c - J.T @ y
            gnorm = float(np.sqrt(np.sum(g * g * inv2s)) / np.sqrt(scale))
            if gnorm < tol:
                break
            H = np.diag(2.0 * prob.sigma) - prob.constraint_hessian(c, y) + rho * J.T @ J
            step, _ = _newton_direction(H, g, prob.sigma)
            m0 = merit(c)
            slope = g @ step
            alpha = 1.0
            # below round-off in the merit value the full Newton step is trusted
            if -slope > 1e-13 * max(abs(m0), scale):
                while alpha > 1e-12:
                    if merit(c + alpha * step) <= m0 + 1e-4 * alpha * slope:
                        break
                    alpha *= 0.5
            c = c + alpha * step
            if alpha * np.sqrt(np.sum(step * step / inv2s)) < 1e-15 * np.sqrt(scale):
                break
        h = prob.constraints(c)
        viol = float(np.max(np.abs(h)))
        if viol < feas_tol and gnorm < tol:
            return ALResult(c, mu, prob.energy(c), viol, gnorm, True, outer, total_inner)
        if viol < 100 * feas_tol and (best is None or gnorm < best[1]):
            best = (c.copy(), gnorm, viol, mu.copy())
        mu = mu - rho * h
        # the penalty only grows while feasibility stalls; a large penalty
        # would amplify round-off in the Newton systems
        if viol > feas_tol and viol > 0.25 * prev_viol:
            rho = min(rho * 10.0, rho_max * scale)
        prev_viol = viol
    viol = float(np.max(np.abs(prob.constraints(c))))
    if best is not None and best[1] < gnorm:
        c, gnorm, viol, mu = best
    ok = viol < feas_tol * 100 and gnorm < tol * 100
    msg = "" if ok else f"no convergence: violation {viol:.2e}, gradient {gnorm:.2e}"
    if msg:
        log.warning(msg)
    return ALResult(c, mu, prob.energy(c), viol, gnorm, ok, max_outer, total_inner, msg)
