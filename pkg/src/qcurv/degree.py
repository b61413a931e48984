"""The map G, its large-t expansion, Morse data of f, and degree counting.

G(p) = avg((f o phi_p) xi) is computed with a zonal quadrature about P that
stays exact for polynomial f at any t, so everything here is independent of
the band limit of the reduction backend.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm as _normal, qmc

from .fspec import FSpec, preset
from .geometry import BallParam, Dimension, dilation, tangent_basis
from .quadrature import zonal_rule
from .reduction import (
    ReducedSolution,
    ReductionError,
    ResolutionError,
    SolverOptions,
    lambda_vector,
    multiplier_field,
    solve_reduced,
)
from .spectral import Backend

log = logging.getLogger(__name__)

__all__ = [
    "g_map",
    "GMap",
    "ExpansionCoefficients",
    "calibrate_expansion",
    "g_expansion",
    "nondegeneracy_probe",
    "NondegeneracyReport",
    "g_norm_table",
    "floors_from_table",
    "default_pole_grid",
    "CriticalPoint",
    "MorseData",
    "morse_analysis",
    "sphere_points",
    "morse_sum",
    "euler_sum",
    "DegreeError",
    "Zero",
    "DegreeReport",
    "brouwer_degree",
    "ball_cloud",
    "alignment_check",
    "decay_fit",
    "LambdaZero",
    "NotFound",
    "find_lambda_zero",
]


# --------------------------------------------------------------------------
# G and its expansion
# --------------------------------------------------------------------------


def g_map(p: BallParam, f: FSpec, h: float = 0.1, check: bool = False) -> np.ndarray:
    """G(p) = avg((f o phi_{P,t}) xi) in the normalised convention."""
    P, t = p.P, p.t
    nodes, w = zonal_rule(f.n, P, t, f.degree + 1, h)
    vals = f(dilation(P, t, nodes)) if t != 1.0 else f(nodes)
    G = (w * vals) @ nodes
    if check:
        nodes2, w2 = zonal_rule(f.n, P, t, f.degree + 1, h / 2)
        G2 = (w2 * f(dilation(P, t, nodes2))) @ nodes2
        if np.max(np.abs(G2 - G)) > 1e-10 * max(1.0, np.max(np.abs(G2))):
            log.warning("g_map quadrature refined at t=%.4g", t)
        return G2
    return G


class GMap:
    """G as a function of the raw ball vector, for the degree engine."""

    def __init__(self, f: FSpec, h: float = 0.1):
        self.f = f
        self.h = h

    def __call__(self, p) -> np.ndarray:
        return g_map(BallParam(np.asarray(p, dtype=float)), self.f, self.h)


@dataclass(frozen=True)
class ExpansionCoefficients:
    a1: float
    a2: float
    per_family: dict
    t_cal: float

    def spread(self) -> tuple[float, float]:
        a1s = [v[0] for v in self.per_family.values()]
        a2s = [v[1] for v in self.per_family.values()]
        return (
            (max(a1s) - min(a1s)) / abs(self.a1),
            (max(a2s) - min(a2s)) / abs(self.a2),
        )


def _calibration_points(n: int, count: int = 6, seed: int = 11) -> np.ndarray:
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((count, n + 1))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    return np.vstack([np.eye(n + 1)[:2], P])


def _fit_family(f: FSpec, points, t: float) -> tuple[float, float]:
    num1 = den1 = num2 = den2 = 0.0
    for P in points:
        grad, _, lap = f.chart_derivatives(P)
        G = g_map(BallParam.from_pt(P, t), f)
        Q = tangent_basis(P)
        num1 += t * (Q.T @ G) @ grad
        den1 += grad @ grad
        num2 += t * t * (G @ P) * lap
        den2 += lap * lap
    return num1 / den1, num2 / den2


def calibrate_expansion(dim: Dimension, t_cal: float = 128.0, eps: float = 0.03) -> ExpansionCoefficients:
    """Fit a1, a2 by least squares against g_map at t_cal and 2 t_cal.

    Two families are used: f0 (1 + eps xi_1) and the generic quadratic
    preset; each is evaluated at the first two axes and a few random poles.
    """
    points = _calibration_points(dim.n)
    fams = {
        "kw": preset("kw", dim, eps),
        "quadratic": preset("quadratic", dim, eps),
    }
    per = {}
    for name, f in fams.items():
        lo = np.array(_fit_family(f, points, t_cal))
        hi = np.array(_fit_family(f, points, 2.0 * t_cal))
        # the fitted values converge like 1/t^2; one Richardson step removes that term
        per[name] = tuple(float(v) for v in (4.0 * hi - lo) / 3.0)
    a1 = float(np.mean([v[0] for v in per.values()]))
    a2 = float(np.mean([v[1] for v in per.values()]))
    return ExpansionCoefficients(a1, a2, per, t_cal)


def g_expansion(P, f: FSpec, t: float, coeffs: ExpansionCoefficients) -> np.ndarray:
    """Two-term prediction a1 grad(f~)/t (tangential) + a2 Lap(f~)/t^2 (along P)."""
    P = np.asarray(P, dtype=float)
    grad, _, lap = f.chart_derivatives(P)
    Q = tangent_basis(P)
    return coeffs.a1 / t * (Q @ grad) + coeffs.a2 / t**2 * lap * P


# --------------------------------------------------------------------------
# Morse data
# --------------------------------------------------------------------------


@dataclass
class CriticalPoint:
    x: np.ndarray
    index: int
    lap_h: float
    hess_eigs: np.ndarray
    grad_norm: float
    degenerate: bool


@dataclass
class MorseData:
    points: list[CriticalPoint]
    degenerate: bool
    margin: float

    @property
    def reliable(self) -> bool:
        return not self.degenerate


def _intrinsic(f: FSpec, x):
    g = f.ambient_gradient(x)
    H = f.ambient_hessian(x)
    Q = tangent_basis(x)
    grad = Q.T @ g
    hess = Q.T @ H @ Q - (g @ x) * np.eye(f.n)
    return Q, grad, hess


def sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-random points on S^n (scrambled Sobol mapped through Gaussians)."""
    eng = qmc.Sobol(d=n + 1, scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(max(count, 2)))))
    u = eng.random_base2(m)[:count]
    z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def morse_analysis(
    f: FSpec, starts: int | None = None, seed: int = 0, tol: float = 1e-12,
    dedupe: float = 1e-6, margin: float = 1e-6,
) -> MorseData:
    """Critical points of f on S^n by Riemannian Newton from a start cloud."""
    n = f.n
    count = starts if starts is not None else 64 * (n + 1)
    eye = np.eye(n + 1)
    cloud = np.vstack([eye, -eye, sphere_points(n, count, seed)])
    found: list[np.ndarray] = []
    scale = max(1.0, float(np.max(np.abs(f(cloud)))))
    for x in cloud:
        for _ in range(60):
            Q, grad, hess = _intrinsic(f, x)
            gn = float(np.linalg.norm(grad))
            if gn < tol * scale:
                break
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            if np.linalg.norm(step) > 0.5:
                step *= 0.5 / np.linalg.norm(step)
            x = x + Q @ step
            x /= np.linalg.norm(x)
        else:
            continue
        if not any(np.linalg.norm(x - y) < dedupe for y in found):
            found.append(x)
    pts = []
    any_deg = False
    for x in found:
        _, grad, hess = _intrinsic(f, x)
        eig = np.linalg.eigvalsh(hess)
        degenerate = bool(np.min(np.abs(eig)) < margin * scale)
        any_deg |= degenerate
        pts.append(
            CriticalPoint(
                x=x,
                index=int(np.sum(eig < 0)),
                lap_h=float(f.sphere_laplacian(x)),
                hess_eigs=eig,
                grad_norm=float(np.linalg.norm(grad)),
                degenerate=degenerate,
            )
        )
    pts.sort(key=lambda c: (c.index, tuple(np.round(c.x, 9))))
    return MorseData(pts, any_deg, margin)


def morse_sum(data: MorseData) -> int:
    """Sum of (-1)^index over critical points with Lap_h f > 0."""
    return int(sum((-1) ** c.index for c in data.points if c.lap_h > 0))


def euler_sum(data: MorseData) -> int:
    return int(sum((-1) ** c.index for c in data.points))


# --------------------------------------------------------------------------
# (H2) probe
# --------------------------------------------------------------------------


@dataclass
class NondegeneracyReport:
    alpha: float
    floor: float
    argmin_P: np.ndarray
    argmin_t: float
    floors_by_t: np.ndarray
    t_grid: np.ndarray
    stability: float
    stable: bool


def default_pole_grid(f: FSpec, count: int = 64, seed: int = 0) -> np.ndarray:
    crit = [c.x for c in morse_analysis(f, seed=seed).points]
    cloud = sphere_points(f.n, count, seed + 1)
    return np.vstack(crit + [cloud]) if crit else cloud


def g_norm_table(f: FSpec, t_grid, P_grid) -> np.ndarray:
    """|G(P, t)| for every (t, P) pair; rows follow ``t_grid``.

    Entries below 1e-12 max|f| are quadrature round-off and are set to 0.
    """
    table = np.array([[np.linalg.norm(g_map(BallParam.from_pt(P, t), f)) for P in P_grid] for t in t_grid])
    scale = float(np.max(np.abs(f(np.asarray(P_grid, dtype=float)))))
    table[table < 1e-12 * scale] = 0.0
    return table


def floors_from_table(
    table, alpha: float, n: int, t_grid, P_grid, stability_band: float = 2.0
) -> NondegeneracyReport:
    """Reduce a |G| table to the floor of t^alpha |G| (t^n |G| / log t at alpha = n)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if alpha > n:
        raise ValueError("alpha must not exceed n")
    w = t_grid**n / np.log(t_grid) if alpha == n else t_grid**alpha
    vals = np.asarray(table) * w[:, None]
    by_t = vals.min(axis=1)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    half = max(1, t_grid.size // 2)
    lo, hi = by_t[:half].min(), by_t[half:].min() if t_grid.size > 1 else by_t.min()
    stability = hi / lo if lo > 0 else 0.0
    floor = float(vals[i, j])
    stable = bool(floor > 0 and 1.0 / stability_band <= stability <= stability_band)
    return NondegeneracyReport(alpha, floor, np.asarray(P_grid)[j], float(t_grid[i]), by_t, t_grid,
                               float(stability), stable)


def nondegeneracy_probe(
    f: FSpec, alpha: float, t_grid, P_grid=None, stability_band: float = 2.0
) -> NondegeneracyReport:
    """Empirical infimum of t^alpha |G(P, t)| (or t^n |G| / log t at alpha = n)."""
    if alpha > f.n:
        raise ValueError("alpha must not exceed n")
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    P_grid = default_pole_grid(f) if P_grid is None else np.asarray(P_grid, dtype=float)
    table = g_norm_table(f, t_grid, P_grid)
    return floors_from_table(table, alpha, f.n, t_grid, P_grid, stability_band)


# --------------------------------------------------------------------------
# Degree by signed zero counting
# --------------------------------------------------------------------------


class DegreeError(RuntimeError):
    pass


@dataclass
class Zero:
    p: np.ndarray
    sign: int
    residual: float
    singular: bool


@dataclass
class DegreeReport:
    map_id: str
    t0: float
    zeros: list[Zero]
    degree: int
    reliable: bool
    boundary_min: float
    boundary_threshold: float
    starts: int
    morse_sum: int | None = None
    boundary_alignment: float | None = None
    notes: list[str] = field(default_factory=list)


def ball_radius(t: float) -> float:
    return (t - 1.0) / t


def ball_cloud(ambient: int, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-random points filling the ball of given radius (origin first)."""
    eng = qmc.Sobol(d=ambient + 1, scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(max(count, 2)))))
    u = eng.random_base2(m)[: max(count - 1, 1)]
    z = _normal.ppf(np.clip(u[:, :ambient], 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * u[:, ambient] ** (1.0 / ambient)
    return np.vstack([np.zeros(ambient), z * r[:, None]])


def shell_points(ambient: int, t0: float, count: int, seed: int = 1) -> np.ndarray:
    eng = qmc.Sobol(d=ambient + 1, scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(max(count, 2)))))
    u = eng.random_base2(m)[:count]
    z = _normal.ppf(np.clip(u[:, :ambient], 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r0, r1 = ball_radius(0.9 * t0), ball_radius(t0)
    r = r0 + (r1 - r0) * u[:, ambient]
    return z * r[:, None]


def fd_jacobian(F: Callable, p, Fp=None, h: float = 1e-6, central: bool = False) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    m = p.size
    J = np.empty((m, m))
    if Fp is None and not central:
        Fp = F(p)
    for k in range(m):
        e = np.zeros(m)
        e[k] = h
        if central:
            J[:, k] = (F(p + e) - F(p - e)) / (2 * h)
        else:
            J[:, k] = (F(p + e) - Fp) / h
    return J


def newton_zero(F: Callable, p0, r_max: float, tol: float = 1e-9, max_iter: int = 40, h: float = 1e-6):
    """Damped Newton with forward-difference Jacobians, confined to |p| < r_max."""
    p = np.array(p0, dtype=float)
    Fp = F(p)
    for _ in range(max_iter):
        res = float(np.linalg.norm(Fp))
        if res < tol:
            return p, Fp, True
        J = fd_jacobian(F, p, Fp, h)
        try:
            step = -np.linalg.solve(J, Fp)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(J, Fp, rcond=None)[0]
        alpha = 1.0
        accepted = False
        for _ in range(12):
            trial = p + alpha * step
            if np.linalg.norm(trial) < r_max:
                Ft = F(trial)
                if np.linalg.norm(Ft) < (1 - 1e-4 * alpha) * res:
                    p, Fp, accepted = trial, Ft, True
                    break
            alpha *= 0.5
        if not accepted:
            return p, Fp, False
    return p, Fp, bool(np.linalg.norm(Fp) < tol)


def brouwer_degree(
    F: Callable,
    ambient: int,
    t0: float,
    starts: int = 32,
    seed: int = 0,
    tol: float = 1e-9,
    dedupe: float = 1e-6,
    boundary_samples: int = 128,
    boundary_threshold: float = 1e-8,
    map_id: str = "map",
    singular_tol: float = 1e-10,
) -> DegreeReport:
    """Degree of F on {|p| < (t0-1)/t0} by counting signed zeros."""
    r0 = ball_radius(t0)
    shell = shell_points(ambient, t0, boundary_samples, seed + 1)
    bmin = float(min(np.linalg.norm(F(p)) for p in shell))
    if bmin < boundary_threshold:
        raise DegreeError(
            f"|{map_id}| = {bmin:.3e} on the boundary shell below threshold {boundary_threshold:.1e}; t0 unsuitable"
        )
    zeros: list[Zero] = []
    r_max = 0.5 * (r0 + 1.0)
    for p0 in ball_cloud(ambient, r0, starts, seed):
        p, Fp, ok = newton_zero(F, p0, r_max, tol)
        if not ok or np.linalg.norm(p) >= r0:
            continue
        if any(np.linalg.norm(p - z.p) < dedupe for z in zeros):
            continue
        J = fd_jacobian(F, p, h=1e-5, central=True)
        det = float(np.linalg.det(J))
        sv = np.linalg.svd(J, compute_uv=False)
        singular = bool(sv[-1] < singular_tol * max(sv[0], 1e-300))
        zeros.append(Zero(p, int(np.sign(det)), float(np.linalg.norm(Fp)), singular))
    zeros.sort(key=lambda z: tuple(np.round(z.p, 8)))
    reliable = not any(z.singular for z in zeros)
    return DegreeReport(
        map_id=map_id,
        t0=t0,
        zeros=zeros,
        degree=int(sum(z.sign for z in zeros)),
        reliable=reliable,
        boundary_min=bmin,
        boundary_threshold=boundary_threshold,
        starts=starts,
    )


# --------------------------------------------------------------------------
# Alignment of G with A and decay laws
# --------------------------------------------------------------------------


@dataclass
class AlignmentReport:
    samples: list[dict]
    fraction_positive: float
    min_dot: float
    min_cosine: float
    homotopy_min: dict


def _axis_poles(backend: Backend):
    e = np.zeros(backend.n + 1)
    e[-1] = 1.0
    return [e, -e]


def alignment_check(
    f: FSpec, backend: Backend, t_values, P_grid=None, opts: SolverOptions = SolverOptions()
) -> AlignmentReport:
    """Sign of G . A over sampled (P, t) plus the homotopy rG + (1-r)A."""
    if f.is_constant:
        raise ValueError("degenerate input: G and A vanish identically for constant f")
    if P_grid is None:
        P_grid = _axis_poles(backend) if backend.kind == "axisym" else sphere_points(f.n, 16)
    rs = (0.0, 0.25, 0.5, 0.75, 1.0)
    samples = []
    homotopy = {r: math.inf for r in rs}
    for P in P_grid:
        warm = None
        for t in sorted(t_values):
            p = BallParam.from_pt(P, t)
            try:
                sol = solve_reduced(p, f, backend, opts, warm)
            except (ReductionError, ResolutionError) as exc:
                raise type(exc)(f"alignment sample P={np.round(P, 6).tolist()}, t={t}: {exc}") from exc
            warm = sol.warm_start
            A = multiplier_field(sol, f, opts.cond_max).A
            G = g_map(p, f)
            dot = float(G @ A)
            cos = dot / (np.linalg.norm(G) * np.linalg.norm(A))
            for r in rs:
                homotopy[r] = min(homotopy[r], float((r * G + (1 - r) * A) @ G))
            samples.append({"P": np.asarray(P).tolist(), "t": float(t), "G_dot_A": dot, "cosine": float(cos),
                            "G_norm": float(np.linalg.norm(G)), "A_norm": float(np.linalg.norm(A))})
    dots = np.array([s["G_dot_A"] for s in samples])
    cos = np.array([s["cosine"] for s in samples])
    return AlignmentReport(samples, float(np.mean(dots > 0)), float(dots.min()), float(cos.min()), homotopy)


def nondegeneracy_order(f: FSpec, P, tol: float = 1e-9) -> int:
    grad, hess, lap = f.chart_derivatives(P)
    scale = max(1.0, abs(float(f(np.asarray(P)))))
    if np.linalg.norm(grad) > tol * scale:
        return 1
    if abs(lap) > tol * scale:
        return 2
    return 3


def _slope(t, y) -> float:
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


def decay_fit(
    f: FSpec,
    P,
    backend: Backend,
    t_solver,
    t_g=(16.0, 32.0, 64.0, 128.0),
    opts: SolverOptions = SolverOptions(),
    tolerance: float = 0.5,
) -> dict:
    """Log-log slopes of the decay laws at a pole P.

    |G| ~ t^-alpha and avg (f_p - f(P))^2 ~ t^-2alpha need no reduced
    solve and are fitted on the large-t grid ``t_g``; |G| is checked
    two-sidedly.  The solver quantities, fitted on ``t_solver``, obey
    O(t^-e) bounds; such a slope counts as consistent when it is at most
    -e + tolerance.
    """
    P = np.asarray(P, dtype=float)
    n = f.n
    q = backend.dim.two_sharp
    alpha = nondegeneracy_order(f, P)
    t_g = np.asarray(t_g, dtype=float)
    gnorm = [np.linalg.norm(g_map(BallParam.from_pt(P, t), f)) for t in t_g]
    fP = float(f(P))
    # solver-free, so measured exactly on the large-t grid like |G|
    fdev = []
    for t in t_g:
        nodes, w = zonal_rule(n, P, t, 2 * f.degree + 1, 0.05)
        fdev.append(float(w @ (f(dilation(P, t, nodes)) - fP) ** 2))
    cP = (backend.dim.f0 / fP) ** ((n - 4) / 8.0)
    rows = []
    warm = None
    for t in sorted(t_solver):
        p = BallParam.from_pt(P, t)
        sol = solve_reduced(p, f, backend, opts, warm)
        warm = sol.warm_start
        mf = multiplier_field(sol, f, opts.cond_max)
        u = sol.renormalized()
        G = g_map(p, f)
        rows.append([
            float(backend.lam @ (u.spectral**2)),
            backend.integrate((np.abs(u.nodal) ** q - cP**q) ** 2),
            float(np.linalg.norm(mf.A - n * cP**q * G)),
        ])
    rows = np.asarray(rows)
    ts = np.asarray(sorted(t_solver), dtype=float)

    def law_f():
        if 2 * alpha < n:
            return -2.0 * alpha
        return -float(n)

    expected = {
        "G": -float(alpha),
        "f_dev_L2sq": law_f(),
        "grad_u_L2sq": -float(min(alpha, n)),
        "u_pow_dev_L2sq": -float(min(alpha, n)),
        "A_minus_leading": -1.5 * float(min(alpha, n)),
    }
    slopes = {
        "G": _slope(t_g, gnorm),
        "f_dev_L2sq": _slope(t_g, fdev),
        "grad_u_L2sq": _slope(ts, rows[:, 0]),
        "u_pow_dev_L2sq": _slope(ts, rows[:, 1]),
        "A_minus_leading": _slope(ts, rows[:, 2]),
    }
    consistent = {"G": abs(slopes["G"] - expected["G"]) <= tolerance}
    for k in list(expected)[1:]:
        consistent[k] = slopes[k] <= expected[k] + tolerance
    return {"alpha": alpha, "slopes": slopes, "expected": expected, "consistent": consistent}


# --------------------------------------------------------------------------
# Zeros of Lambda
# --------------------------------------------------------------------------


class NotFound(RuntimeError):
    def __init__(self, msg, diagnostics=None, best=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}
        self.best = best


@dataclass
class LambdaZero:
    p: BallParam
    solution: ReducedSolution
    lambda_vec: np.ndarray
    lambda_norm: float
    evaluations: int
    diagnostics: dict = field(default_factory=dict)


def _axis_point(n: int, s: float) -> BallParam:
    p = np.zeros(n + 1)
    p[-1] = s
    return BallParam(p)


def find_lambda_zero(
    f: FSpec,
    t0: float,
    backend: Backend,
    opts: SolverOptions = SolverOptions(),
    tol: float = 1e-8,
    seeds=None,
    sweep_points: int = 37,
    starts: int = 8,
    max_evals: int = 400,
) -> LambdaZero:
    """Locate p with C(p)^{-1} A(p) = 0 inside {t < t0}.

    Axisymmetric backends sweep the axis, bracket sign changes of the last
    component and refine with Brent's method.  The full backend runs damped
    Newton from the given seeds (zeros of G, say) and the origin.
    """
    n = f.n
    r0 = min(ball_radius(t0), ball_radius(backend.t_max))
    evals = 0
    origin = BallParam.origin(n + 1)
    lam0, sol0 = lambda_vector(origin, f, backend, opts)
    evals += 1
    if np.linalg.norm(lam0) < tol:
        return LambdaZero(origin, sol0, lam0, float(np.linalg.norm(lam0)), evals)

    best = (float(np.linalg.norm(lam0)), origin, sol0, lam0)

    if backend.kind == "axisym":
        grid = np.linspace(-r0, r0, sweep_points)
        cache: dict[float, tuple] = {}
        warm = sol0.warm_start

        def lam_at(s, w=None):
            nonlocal evals
            evals += 1
            if evals > max_evals:
                raise NotFound("evaluation budget exhausted", best=best)
            lv, sol = lambda_vector(_axis_point(n, s), f, backend, opts, w)
            return lv, sol

        values = []
        order = np.argsort(np.abs(grid))
        for idx in order:
            s = float(grid[idx])
            if s == 0.0:
                lv, sol = lam0, sol0
            else:
                near = min(cache, key=lambda k: abs(k - s)) if cache else None
                w = cache[near][1].warm_start if near is not None else warm
                lv, sol = lam_at(s, w)
            cache[s] = (lv, sol)
            mag = float(np.linalg.norm(lv))
            if mag < best[0]:
                best = (mag, sol.p, sol, lv)
        for s in grid:
            values.append(cache[float(s)][0][-1])
        values = np.asarray(values)
        diag = {"sweep_s": grid.tolist(), "sweep_lambda": values.tolist()}
        brackets = [
            (grid[i], grid[i + 1]) for i in range(len(grid) - 1) if values[i] * values[i + 1] < 0
        ]
        exact = [grid[i] for i in range(len(grid)) if abs(values[i]) < tol]
        for s in exact:
            lv, sol = cache[float(s)]
            return LambdaZero(sol.p, sol, lv, float(np.linalg.norm(lv)), evals, diag)
        # prefer the bracket nearest the origin
        brackets.sort(key=lambda ab: min(abs(ab[0]), abs(ab[1])))
        for a, b in brackets:
            w = cache[float(a)][1].warm_start
            last = {}

            def scalar(s):
                lv, sol = lam_at(s, w)
                last["v"] = (lv, sol)
                return lv[-1]

            s_star = brentq(scalar, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            lv, sol = lam_at(s_star, w)
            mag = float(np.linalg.norm(lv))
            if mag < best[0]:
                best = (mag, sol.p, sol, lv)
            if mag < tol:
                return LambdaZero(sol.p, sol, lv, mag, evals, diag)
        raise NotFound(
            f"no zero of Lambda on the axis within t < {t0:g} (best |Lambda| = {best[0]:.3e})",
            diagnostics=diag,
            best=best,
        )

    seeds = [] if seeds is None else [np.asarray(s, dtype=float) for s in seeds]
    seeds = [s for s in seeds if np.linalg.norm(s) < r0] + list(ball_cloud(n + 1, r0, starts, 7)[1:])
    warm_cache = {"w": sol0.warm_start}

    def F(pv):
        nonlocal evals, best
        evals += 1
        if evals > max_evals:
            raise NotFound("evaluation budget exhausted", best=best)
        lv, sol = lambda_vector(BallParam(pv), f, backend, opts, warm_cache["w"])
        mag = float(np.linalg.norm(lv))
        if mag < best[0]:
            best = (mag, sol.p, sol, lv)
        return lv

    tried = 0
    try:
        for s in seeds:
            tried += 1
            p, Fp, ok = newton_zero(F, s, r0, tol)
            if ok:
                lv, sol = lambda_vector(BallParam(p), f, backend, opts, warm_cache["w"])
                return LambdaZero(sol.p, sol, lv, float(np.linalg.norm(lv)), evals, {"starts_tried": tried})
    except NotFound as exc:
        exc.best = best
        raise
    raise NotFound(
        f"no zero of Lambda found from {tried} starts (best |Lambda| = {best[0]:.3e})",
        diagnostics={"starts_tried": tried},
        best=best,
    )
