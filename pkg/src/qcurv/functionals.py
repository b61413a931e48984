"""Energies, quotients and residuals of fields on S^n."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fspec import FSpec
from .geometry import BallParam, Dimension, conformal_map
from .optimize import MomentProblem, minimize_constrained
from .spectral import AxisymBackend, Backend, Field, signed_pow

log = logging.getLogger(__name__)

__all__ = [
    "DegenerateInput",
    "EnergyBreakdown",
    "energy",
    "quotient_Jaq",
    "quotient_Jbar",
    "Residual",
    "pde_residual",
    "kw_residual",
    "AubinReport",
    "aubin_probe",
    "sobolev_probe",
    "random_field",
]


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class EnergyBreakdown:
    biharm: float
    grad: float
    mass: float

    def total(self, a: float = 1.0) -> float:
        return a * (self.biharm + self.grad) + self.mass


def _check_a(a: float):
    if not 0.0 < a <= 1.0:
        raise ValueError("weight a must lie in (0, 1]")


def energy(u: Field, a: float = 1.0) -> EnergyBreakdown:
    """(avg (Lap u)^2, c_n avg |grad u|^2, d_n avg u^2), from coefficients."""
    _check_a(a)
    c = u.spectral
    lam = u.backend.lam
    dim = u.backend.dim
    c2 = c * c
    return EnergyBreakdown(
        float(np.sum(lam * lam * c2)), dim.c_n * float(np.sum(lam * c2)), dim.d_n * float(np.sum(c2))
    )


def _power_mean(u: Field, q: float, weight=None) -> float:
    vals = np.abs(u.nodal) ** q
    if weight is not None:
        vals = vals * weight
    return u.backend.integrate(vals)


def quotient_Jaq(u: Field, a: float, q: float) -> float:
    """E_a[u] / (avg |u|^q)^{2/q}."""
    dim = u.backend.dim
    if not 2.0 < q <= dim.two_sharp + 1e-12:
        raise ValueError("q must lie in (2, 2#]")
    den = _power_mean(u, q)
    if den < 1e-14:
        raise DegenerateInput("avg |u|^q is numerically zero")
    return energy(u, a).total(a) / den ** (2.0 / q)


def quotient_Jbar(u: Field, p: BallParam, f: FSpec) -> float:
    """E_1[u] / (avg f_p |u|^{2#})^{2/2#} with f_p = f o phi_p."""
    be = u.backend
    q = be.dim.two_sharp
    fp = f(conformal_map(p, be.nodes))
    if np.min(fp) <= 0.0:
        raise DegenerateInput("f_p is not positive on the grid")
    den = _power_mean(u, q, fp)
    if den <= 0.0:
        raise DegenerateInput("nonpositive denominator")
    return energy(u).total(1.0) / den ** (2.0 / q)


@dataclass
class Residual:
    field: Field
    nodes: np.ndarray
    values: np.ndarray
    sup: float
    l2: float


def _fvalues(f, x):
    if isinstance(f, FSpec):
        return f(x)
    if callable(f):
        return np.asarray(f(x), dtype=float)
    return np.full(x.shape[:-1], float(f))


def pde_residual(u: Field, f: FSpec | Callable | float) -> Residual:
    """P u - (n-4)/2 f |u|^{2#-2} u; norms on the backend's residual grid."""
    be = u.backend
    dim = be.dim
    k = (dim.n - 4) / 2.0

    def res_at(x, uvals, puvals):
        return puvals - k * _fvalues(f, x) * signed_pow(uvals, dim.two_sharp - 1.0)

    pc = be.symbol(1.0) * u.spectral
    coarse = res_at(be.nodes, u.nodal, be.synthesize(pc))
    g = be.residual_grid()
    fine = res_at(g.nodes, be.evaluate(u.spectral, g.nodes), be.evaluate(pc, g.nodes))
    return Residual(
        Field(be, values=coarse),
        g.nodes,
        fine,
        float(np.max(np.abs(fine))),
        float(np.sqrt(g.integrate(fine * fine))),
    )


def kw_residual(u: Field, f: FSpec) -> np.ndarray:
    """Component j = avg <grad f, grad xi_j> |u|^{2#}, by nodal quadrature."""
    be = u.backend
    g = be.residual_grid()
    x = g.nodes
    dens = np.abs(be.evaluate(u.spectral, x)) ** be.dim.two_sharp
    grad = f.sphere_gradient(x)  # <grad f, e_j - x_j x> = (grad f)_j
    out = np.zeros(be.n + 1)
    for j in be.active_axes:
        out[j] = g.integrate(grad[:, j] * dens)
    return out


def random_field(backend: Backend, rng, decay: float = 2.0, offset: float = 0.0) -> Field:
    c = rng.standard_normal(backend.size) / (1.0 + backend.degrees) ** decay
    c[0] += offset
    return Field(backend, coeffs=c)


@dataclass
class AubinReport:
    best: float
    values: list
    converged: list
    best_coeffs: np.ndarray
    a: float
    q: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.best >= self.threshold


def aubin_probe(
    dim: Dimension,
    a: float = 0.95,
    q: float | None = None,
    starts: int = 50,
    seed: int = 0,
    backend: Backend | None = None,
    noise: float = 0.5,
    slack: float = 1e-3,
) -> AubinReport:
    """Multistart minimisation of J_{a,q} over {avg |u|^q xi_j = 0}.

    One-sided: it can only exhibit a violation of the lower bound d_n, never
    prove it.  Each start is 1 plus a random band-limited perturbation; the
    run minimises E_a under avg |u|^q = 1 so the quotient equals the energy.
    """
    q = dim.two_sharp if q is None else float(q)
    if not 2.0 < q <= dim.two_sharp + 1e-12:
        raise ValueError("q must lie in (2, 2#]")
    if not 0.0 < a <= 1.0:
        raise ValueError("a must lie in (0, 1]")
    be = backend if backend is not None else AxisymBackend(dim, 24)
    x = be.nodes
    G = np.vstack([np.ones((1, be.grid.size))] + [x[None, :, j] for j in be.active_axes])
    targets = np.zeros(G.shape[0])
    targets[0] = 1.0
    prob = MomentProblem(be.B, be.weights, be.symbol(a), G, targets, q)
    rng = np.random.default_rng(seed)
    values, flags = [], []
    best, best_c = np.inf, None
    for k in range(starts):
        c0 = rng.standard_normal(be.size) * noise / (1.0 + be.degrees) ** 2
        c0[0] = 1.0
        res = minimize_constrained(prob, c0, max_outer=30)
        flags.append(bool(res.converged))
        if not res.converged:
            log.info("aubin start %d did not converge: %s", k, res.message)
        # report the quotient of the iterate, feasible or not
        u = Field(be, coeffs=res.coeffs)
        val = quotient_Jaq(u, a, q)
        values.append(val)
        if val < best:
            best, best_c = val, res.coeffs
    return AubinReport(float(best), values, flags, best_c, a, q, dim.d_n - slack)


def sobolev_probe(backend: Backend, count: int = 200, seed: int = 0) -> np.ndarray:
    """J_{1,2#} on random band-limited fields (mixed sign and near-constant)."""
    rng = np.random.default_rng(seed)
    q = backend.dim.two_sharp
    out = []
    for k in range(count):
        off = 0.0 if k % 2 == 0 else 3.0 * rng.random()
        out.append(quotient_Jaq(random_field(backend, rng, offset=off), 1.0, q))
    return np.asarray(out)
