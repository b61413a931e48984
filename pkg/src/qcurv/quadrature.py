"""Quadrature on S^n for volume-normalised integrals.

Three rules are provided:

* axisymmetric Gauss-Jacobi rules in mu = x_{n+1} (weight (1-mu^2)^{(n-2)/2}),
* full product rules over hyperspherical angles,
* zonal rules adapted to an axis P, with the latitude integrated in a
  logarithmic chart variable so that functions concentrated near -P at
  scale 1/t are resolved for any t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .geometry import Dimension, tangent_basis

__all__ = [
    "QuadratureError",
    "QuadratureGrid",
    "monomial_moment",
    "make_axisym_grid",
    "make_full_grid",
    "sphere_rule",
    "zonal_rule",
]

DEFAULT_MAX_NODES = 400_000


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and normalised weights on S^n.

    For ``kind == "axisym"`` the nodes are representatives
    (sqrt(1-mu^2), 0, ..., 0, mu) of latitude spheres, and only integrands
    invariant under rotations fixing e_{n+1} are integrated correctly.
    """

    kind: str
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def mu(self) -> np.ndarray:
        return self.nodes[:, -1]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def monomial_moment(alpha) -> float:
    """Normalised average of x^alpha over S^n, with n = len(alpha) - 1."""
    alpha = np.asarray(alpha, dtype=int)
    if np.any(alpha % 2):
        return 0.0
    m = alpha.size  # ambient dimension n+1
    log_num = np.sum(gammaln((alpha + 1) / 2.0)) - gammaln((alpha.sum() + m) / 2.0)
    log_den = m * math.log(math.pi) / 2.0 - math.lgamma(m / 2.0)
    return float(math.exp(log_num - log_den))


def _gauss_jacobi(k: int, a: float):
    try:
        x, w = roots_jacobi(k, a, a)
    except Exception as exc:  # pragma: no cover - scipy failure path
        raise QuadratureError(f"Gauss-Jacobi node solve failed for k={k}") from exc
    if not np.all(np.isfinite(x)) or not np.all(w > 0):
        raise QuadratureError(f"Gauss-Jacobi node solve failed for k={k}")
    return x, w / w.sum()


def make_axisym_grid(dim: Dimension, K: int) -> QuadratureGrid:
    """K-point Gauss-Jacobi rule in mu, exact for zonal polynomials of degree 2K-1."""
    if K < 4:
        raise ValueError("axisymmetric grid needs K >= 4")
    mu, w = _gauss_jacobi(K, (dim.n - 2) / 2.0)
    nodes = np.zeros((K, dim.n + 1))
    nodes[:, 0] = np.sqrt(1.0 - mu * mu)
    nodes[:, -1] = mu
    return QuadratureGrid("axisym", dim.n, nodes, w, 2 * K - 1)


@lru_cache(maxsize=64)
def sphere_rule(m: int, degree: int):
    """Product rule on S^m (in R^{m+1}) exact for polynomials of the given degree.

    Returns read-only ``(nodes, weights)`` with weights summing to one.
    """
    nodes, weights = _sphere_rule(m, degree)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _cross_polytope(m: int):
    # +-e_i with equal weights: exact through degree 3 on S^m
    e = np.eye(m + 1)
    return np.vstack([e, -e]), np.full(2 * (m + 1), 1.0 / (2 * (m + 1)))


def _sphere_rule(m: int, degree: int):
    if degree <= 3 and m >= 2:
        return _cross_polytope(m)
    if m == 1:
        k = degree + 1
        th = 2.0 * np.pi * (np.arange(k) + 0.5) / k
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(k, 1.0 / k)
    k = (degree + 2) // 2
    mu, wmu = _gauss_jacobi(k, (m - 2) / 2.0)
    sub, wsub = _sphere_rule(m - 1, degree)
    r = np.sqrt(1.0 - mu * mu)
    nodes = np.concatenate(
        [r[:, None, None] * sub[None, :, :], np.broadcast_to(mu[:, None, None], (k, sub.shape[0], 1))],
        axis=2,
    ).reshape(-1, m + 1)
    weights = (wmu[:, None] * wsub[None, :]).ravel()
    return nodes, weights


def full_grid_size(n: int, degree: int) -> int:
    return ((degree + 2) // 2) ** (n - 1) * (degree + 1)


def make_full_grid(
    dim: Dimension, L: int, oversample: float = 1.0, max_nodes: int = DEFAULT_MAX_NODES
) -> QuadratureGrid:
    """Product rule exact for degree ``2*ceil(oversample*L)``."""
    if L < 2:
        raise ValueError("full grid needs band limit L >= 2")
    if oversample < 1.0:
        raise ValueError("oversample must be >= 1")
    degree = 2 * math.ceil(oversample * L)
    count = full_grid_size(dim.n, degree)
    if count > max_nodes:
        raise QuadratureError(
            f"full grid for n={dim.n}, degree {degree} needs {count} nodes "
            f"(cap {max_nodes}); lower L or oversample"
        )
    nodes, weights = sphere_rule(dim.n, degree)
    return QuadratureGrid("full", dim.n, nodes, weights, degree)


def zonal_rule(n: int, P, t: float = 1.0, omega_degree: int = 4, h: float = 0.1):
    """Quadrature adapted to the axis P.

    Points are x = s P + sqrt(1-s^2) omega with omega on the unit sphere of
    P^perp.  The latitude is parametrised by u = log r, r the radius of the
    stereographic chart centred at P, so that s = -tanh(u) and the measure is
    proportional to sech(u)^n du; the trapezoid rule in u converges
    geometrically.  The window is widened by log(2t) towards -P, where
    dilations by t concentrate their variation.

    Integrands must be polynomial of degree <= ``omega_degree`` in omega for
    each fixed latitude.
    """
    P = np.asarray(P, dtype=float)
    P = P / np.linalg.norm(P)
    U = (42.0 + n * math.log(2.0)) / n + 1.0
    lo, hi = -U, U + math.log(2.0 * max(t, 1.0))
    m = int(math.ceil((hi - lo) / h))
    u = np.linspace(lo, hi, m + 1)
    hu = u[1] - u[0]
    s = -np.tanh(u)
    c = 1.0 / np.cosh(u)
    wu = hu * c**n
    wu[0] *= 0.5
    wu[-1] *= 0.5
    wu *= math.exp(math.lgamma((n + 1) / 2) - math.lgamma(n / 2)) / math.sqrt(math.pi)
    omega, wom = sphere_rule(n - 1, omega_degree)
    E = tangent_basis(P)
    om_amb = omega @ E.T
    nodes = s[:, None, None] * P[None, None, :] + c[:, None, None] * om_amb[None, :, :]
    weights = wu[:, None] * wom[None, :]
    return nodes.reshape(-1, n + 1), weights.ravel()
