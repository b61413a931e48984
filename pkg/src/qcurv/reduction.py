"""Finite-dimensional reduction.

For a ball point p the transported function f_p = f o phi_p is fixed and
E_1 is minimised over band-limited u with

    avg(f_p |u|^{2#}) = 1,      avg(|u|^{2#} xi_j) = 0   (j = 1..n+1).

The minimiser v (normalised) has energy M_p and satisfies, weakly,

    P v = (M_p f_p - sum_j L_j xi_j) |v|^{2#-2} v.

Rescaling u = kappa v with kappa^{2#-2} = 2 M_p / (n-4) turns this into

    P u = ((n-4)/2 f_p - sum_j Lambda_j xi_j) |u|^{2#-2} u,
    Lambda = L (n-4) / (2 M_p),

which is the form in which the multipliers are reported.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .fspec import FSpec
from .geometry import BallParam, conformal_map, dilation_differential, xi_gradient
from .optimize import ALResult, MomentProblem, minimize_constrained
from .spectral import Backend, Field

log = logging.getLogger(__name__)

__all__ = [
    "ReductionError",
    "ResolutionError",
    "IllConditioned",
    "SolverOptions",
    "ReducedSolution",
    "MultiplierField",
    "transported_f",
    "solve_reduced",
    "multiplier_field",
    "lambda_vector",
    "continuation_sweep",
    "estimate_checks",
]


class ReductionError(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ResolutionError(ValueError):
    pass


class IllConditioned(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    feas_tol: float = 1e-12
    max_outer: int = 25
    max_inner: int = 60
    init_noise: float = 0.0
    seed: int | None = None
    sign_tie: float = 1e-12
    enforce_resolution: bool = True
    convexity_probe: bool = True
    cond_max: float = 1e8


@dataclass
class ReducedSolution:
    p: BallParam
    u: Field
    M_p: float
    multipliers: np.ndarray
    multipliers_raw: np.ndarray
    el_residual: float
    feasibility: float
    min_u: float
    convexity: float
    upper_bound_gap: float
    converged: bool
    sign_tie: bool
    al: ALResult = field(repr=False)
    fp_nodal: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self):
        return self.u.backend.dim

    @property
    def kappa(self) -> float:
        n = self.dim.n
        return (2.0 * self.M_p / (n - 4)) ** (1.0 / (self.dim.two_sharp - 2.0))

    def renormalized(self) -> Field:
        """kappa * u, the solution of the reduced equation with coefficient (n-4)/2."""
        return Field(self.u.backend, coeffs=self.kappa * self.u.spectral)

    @property
    def warm_start(self) -> np.ndarray:
        return np.array(self.u.spectral)


@dataclass
class MultiplierField:
    C: np.ndarray
    A: np.ndarray
    lambda_vec: np.ndarray
    condition: float


def _check_axisym_f(backend: Backend, f: FSpec):
    if backend.kind == "axisym" and f.axis() != backend.n:
        raise ValueError(
            "axisymmetric backend needs f depending on the last coordinate only"
        )


def transported_f(p: BallParam, f: FSpec, x) -> np.ndarray:
    return f(conformal_map(p, x))


def transported_grad_xi(p: BallParam, f: FSpec, x, j: int) -> np.ndarray:
    """<grad f_p, grad xi_j> at x, via the pushforward of grad xi_j."""
    v = xi_gradient(x, j)
    if p.is_origin:
        return np.sum(f.ambient_gradient(x) * v, axis=-1)
    y = conformal_map(p, x)
    dv = dilation_differential(p.P, p.t, x, v)
    return np.sum(f.ambient_gradient(y) * dv, axis=-1)


def _validate(p: BallParam, f: FSpec, backend: Backend, opts: SolverOptions):
    if f.n != backend.n or p.p.size != backend.n + 1:
        raise ValueError("dimension mismatch between f, p and backend")
    _check_axisym_f(backend, f)
    if not p.is_origin and not backend.supports(p.P):
        raise ValueError("axisymmetric backend needs p on the last coordinate axis")
    if opts.enforce_resolution and p.t > backend.t_max + 1e-12:
        raise ResolutionError(
            f"t = {p.t:.4g} exceeds the resolution bound {backend.t_max:.4g} of band limit {backend.L}"
        )


def solve_reduced(
    p: BallParam,
    f: FSpec,
    backend: Backend,
    opts: SolverOptions = SolverOptions(),
    warm: np.ndarray | None = None,
) -> ReducedSolution:
    """Minimise E_1 under the normalisation and moment constraints at p."""
    _validate(p, f, backend, opts)
    dim = backend.dim
    q = dim.two_sharp
    x = backend.nodes
    fp = transported_f(p, f, x)
    if np.min(fp) <= 0.0:
        raise ValueError("f_p must be positive on the grid")
    axes = backend.active_axes
    G = np.vstack([fp[None, :]] + [x[None, :, j] for j in axes])
    targets = np.zeros(G.shape[0])
    targets[0] = 1.0
    prob = MomentProblem(backend.B, backend.weights, backend.symbol(1.0), G, targets, q)

    mean_fp = backend.integrate(fp)
    if warm is not None:
        c0 = np.array(warm, dtype=float)
    else:
        c0 = np.zeros(backend.size)
        c0[0] = mean_fp ** (-1.0 / q)
        if opts.init_noise > 0.0:
            rng = np.random.default_rng(opts.seed)
            decay = 1.0 / (1.0 + backend.degrees) ** 2
            c0 = c0 + opts.init_noise * c0[0] * rng.standard_normal(backend.size) * decay
    res = minimize_constrained(
        prob, c0, tol=opts.tol, feas_tol=opts.feas_tol,
        max_outer=opts.max_outer, max_inner=opts.max_inner,
    )
    if not res.converged:
        raise ReductionError(f"reduced solve at t={p.t:.4g} failed: {res.message}", best=res)

    c = res.coeffs
    tie = abs(c[0]) <= opts.sign_tie
    if c[0] < 0 and not tie:
        c = -c
    M = prob.energy(c)
    v = backend.B @ c
    nl = np.abs(v) ** (q - 2.0) * v
    sc = backend.symbol(1.0) * c
    r = sc - M * (backend.WB.T @ (fp * nl))
    span = np.stack([backend.WB.T @ (x[:, j] * nl) for j in axes], axis=1)
    fit, *_ = np.linalg.lstsq(-span, r, rcond=None)
    defect = r + span @ fit
    sig = backend.symbol(1.0)
    el = float(np.sqrt(np.sum(defect**2 / sig)) / math.sqrt(M))

    n = dim.n
    raw = np.zeros(n + 1)
    raw[list(axes)] = fit
    lam = raw * (n - 4) / (2.0 * M)
    convex = math.nan
    if opts.convexity_probe:
        convex = prob.tangent_min_eigenvalue(c, res.multipliers) / (2.0 * M)
    bound = dim.d_n * mean_fp ** (-2.0 / q)
    return ReducedSolution(
        p=p,
        u=Field(backend, coeffs=c),
        M_p=M,
        multipliers=lam,
        multipliers_raw=raw,
        el_residual=el,
        feasibility=float(np.max(np.abs(prob.constraints(c)))),
        min_u=float(np.min(v)),
        convexity=convex,
        upper_bound_gap=M - bound,
        converged=True,
        sign_tie=bool(tie),
        al=res,
        fp_nodal=fp,
    )


def multiplier_field(sol: ReducedSolution, f: FSpec, cond_max: float = 1e8) -> MultiplierField:
    """C, A and C^{-1} A from the renormalised minimiser."""
    be = sol.u.backend
    n = be.n
    u = sol.renormalized().nodal
    dens = np.abs(u) ** be.dim.two_sharp
    C = be.gradient_gram(dens)
    A = np.zeros(n + 1)
    for j in be.active_axes:
        A[j] = be.integrate(transported_grad_xi(sol.p, f, be.nodes, j) * dens)
    cond = float(np.linalg.cond(C))
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditioned(f"C(p) condition number {cond:.3e} exceeds {cond_max:.1e}")
    return MultiplierField(C, A, np.linalg.solve(C, A), cond)


def lambda_vector(
    p: BallParam, f: FSpec, backend: Backend, opts: SolverOptions = SolverOptions(), warm=None
):
    """(C^{-1} A at p, solution) in one call."""
    sol = solve_reduced(p, f, backend, opts, warm)
    return multiplier_field(sol, f, opts.cond_max).lambda_vec, sol


def continuation_sweep(
    f: FSpec,
    path,
    backend: Backend,
    opts: SolverOptions = SolverOptions(),
    step_cap: float = 0.25,
) -> list[ReducedSolution]:
    """Warm-started solves along a path of ball points."""
    out: list[ReducedSolution] = []
    warm = None
    prev = None
    for k, p in enumerate(path):
        if prev is not None and np.linalg.norm(p.p - prev.p) > step_cap:
            raise ValueError(f"path step {k} exceeds the step cap {step_cap}")
        try:
            sol = solve_reduced(p, f, backend, opts, warm)
        except ReductionError as exc:
            raise ReductionError(f"path index {k}: {exc}", best=exc.best) from exc
        out.append(sol)
        warm = sol.warm_start
        prev = p
    return out


def estimate_checks(sol: ReducedSolution, f: FSpec) -> dict:
    """Distances of the renormalised minimiser to the constant c_P.

    c_P = (f0 / f(P))^{(n-4)/8} solves the equation with f frozen at f(P);
    the comparison uses the renormalised field kappa*u, whose equation has
    coefficient (n-4)/2 in front of f_p.
    """
    be = sol.u.backend
    dim = be.dim
    n = dim.n
    if sol.p.is_origin:
        # no distinguished pole at p = 0; compare against the average of f
        fP = be.integrate(sol.fp_nodal)
    else:
        fP = float(f(sol.p.P))
    dev_f = float(np.max(np.abs(sol.fp_nodal - fP)))
    cP = (dim.f0 / fP) ** ((n - 4) / 8.0)
    u = sol.renormalized()
    diff = np.array(u.spectral)
    diff[0] -= cP
    sup = float(np.max(np.abs(be.synthesize(diff))))
    h2 = float(np.sqrt(np.sum(be.symbol(1.0) * diff * diff)))
    lam = float(np.linalg.norm(sol.multipliers))
    ratio = (lambda a: a / dev_f if dev_f > 0 else 0.0)
    return {
        "f_dev_sup": dev_f,
        "c_P": cP,
        "u_dev_sup": sup,
        "u_dev_H2": h2,
        "lambda_norm": lam,
        "min_u": float(np.min(u.nodal)),
        "ratio_sup": ratio(sup),
        "ratio_H2": ratio(h2),
        "ratio_lambda": ratio(lam),
        "renormalization_kappa": sol.kappa,
    }
