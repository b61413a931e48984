"""Round-sphere geometry: dimensional constants, stereographic charts and
the dilation family of conformal transformations.

Points of S^n are stored as arrays whose last axis has length ``n + 1``.
Every function is vectorised over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Dimension",
    "BallParam",
    "ChartSingularity",
    "make_dimension",
    "paneitz_symbol",
    "laplace_eigenvalue",
    "sphere_volume",
    "tangent_basis",
    "stereo_project",
    "stereo_inverse",
    "dilation",
    "dilation_scale",
    "dilation_differential",
    "conformal_map",
    "conformal_jacobian",
    "inverse_map",
    "pullback_T",
    "xi_gradient",
]


class ChartSingularity(ValueError):
    """Raised when a stereographic chart is asked to project its own pole."""


def sphere_volume(n: int) -> float:
    """Volume of the unit n-sphere, 2 pi^{(n+1)/2} / Gamma((n+1)/2)."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class Dimension:
    n: int
    c_n: float
    d_n: float
    two_sharp: float
    f0: float
    omega_n: float
    k0_inv_scaled: float

    @property
    def ambient(self) -> int:
        return self.n + 1

    @property
    def critical_power(self) -> float:
        """Exponent (n+4)/(n-4) = 2# - 1 of the nonlinearity."""
        return self.two_sharp - 1.0

    def identities(self) -> dict[str, float]:
        """Residuals of the algebraic identities tying the constants together."""
        n = self.n
        return {
            "d_n - (n-4)/2*f0": self.d_n - (n - 4) / 2 * self.f0,
            "c_n - (n^2-2n-4)/2": self.c_n - (n * n - 2 * n - 4) / 2,
            "(k0_inv_scaled - d_n)/d_n": (self.k0_inv_scaled - self.d_n) / self.d_n,
        }


def _k0_raw(n: int) -> float:
    # pi^2 n (n-4)(n^2-4) Gamma(n/2)^{4/n} Gamma(n)^{-4/n}
    log_ratio = math.lgamma(n / 2) - math.lgamma(n)
    return math.pi**2 * n * (n - 4) * (n * n - 4) * math.exp(4.0 / n * log_ratio)


def make_dimension(n: int) -> Dimension:
    """Build the constants attached to S^n.

    Raises
    ------
    ValueError
        If ``n < 5``; the critical exponent ``2n/(n-4)`` is undefined or
        negative there.
    """
    if int(n) != n or n < 5:
        raise ValueError(f"dimension must be an integer >= 5, got {n!r}")
    n = int(n)
    omega = sphere_volume(n)
    # Fraction arithmetic keeps the exact rationals exact in floating point.
    c_n = (n * n - 2 * n - 4) / 2
    d_n = (n - 4) * n * (n * n - 4) / 16
    f0 = n * (n * n - 4) / 8
    two_sharp = 2 * n / (n - 4)
    k0_inv_scaled = _k0_raw(n) * omega ** (-4.0 / n)
    return Dimension(n, c_n, d_n, two_sharp, f0, omega, k0_inv_scaled)


def laplace_eigenvalue(dim: Dimension, k):
    """Eigenvalue k(k+n-1) of the (nonnegative) Laplacian on degree-k harmonics."""
    k = np.asarray(k)
    return k * (k + dim.n - 1)


def paneitz_symbol(dim: Dimension, k, a: float = 1.0):
    """Multiplier of the weighted Paneitz energy on degree-k harmonics.

    Returns ``a*lam^2 + a*c_n*lam + d_n`` with ``lam = k(k+n-1)``; ``a = 1``
    is the Paneitz operator itself.
    """
    if not 0.0 < a <= 1.0:
        raise ValueError("weight a must lie in (0, 1]")
    if np.any(np.asarray(k) < 0):
        raise ValueError("degree must be nonnegative")
    lam = laplace_eigenvalue(dim, k).astype(float)
    return a * lam * lam + a * dim.c_n * lam + dim.d_n


@dataclass(frozen=True)
class BallParam:
    """Point p of the open unit ball, identified with (P, t) via p = (t-1)/t P."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).copy()
        if p.ndim != 1:
            raise ValueError("ball parameter must be a vector")
        if not np.linalg.norm(p) < 1.0:
            raise ValueError("ball parameter must satisfy |p| < 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_pt(cls, P, t: float) -> "BallParam":
        P = np.asarray(P, dtype=float)
        if t < 1.0:
            raise ValueError("t must be >= 1")
        return cls((t - 1.0) / t * P / np.linalg.norm(P))

    @classmethod
    def origin(cls, ambient: int) -> "BallParam":
        return cls(np.zeros(ambient))

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.p))

    @property
    def t(self) -> float:
        return 1.0 / (1.0 - self.radius)

    @cached_property
    def P(self) -> np.ndarray:
        r = self.radius
        if r == 0.0:
            # canonical pole; every consumer is P-independent at t = 1
            P = np.zeros(self.p.size)
            P[-1] = 1.0
            return P
        return self.p / r

    @property
    def is_origin(self) -> bool:
        return self.radius == 0.0

    def to_list(self) -> list[float]:
        return [float(v) for v in self.p]


def tangent_basis(Q) -> np.ndarray:
    """Orthonormal basis of Q^perp as the columns of an (n+1) x n matrix.

    For Q = e_{n+1} this is (e_1, ..., e_n), so the chart agrees with the
    textbook north-pole projection.
    """
    Q = np.asarray(Q, dtype=float)
    m = Q.size
    e = np.zeros(m)
    e[-1] = 1.0
    v = e - Q
    nv = v @ v
    H = np.eye(m)
    if nv > 1e-30:
        H -= 2.0 * np.outer(v, v) / nv
    return H[:, :-1]


def stereo_project(pole, x) -> np.ndarray:
    """Stereographic projection of ``x`` from ``pole`` onto R^n.

    The antipode of the pole is sent to the origin.
    """
    pole = np.asarray(pole, dtype=float)
    x = np.asarray(x, dtype=float)
    s = x @ pole
    denom = 1.0 - s
    if np.any(denom <= 1e-14):
        raise ChartSingularity("cannot project the projection pole")
    E = tangent_basis(pole)
    return (x @ E) / denom[..., None]


def stereo_inverse(pole, y) -> np.ndarray:
    pole = np.asarray(pole, dtype=float)
    y = np.asarray(y, dtype=float)
    E = tangent_basis(pole)
    r2 = np.sum(y * y, axis=-1)[..., None]
    return (2.0 * y @ E.T + (r2 - 1.0) * pole) / (r2 + 1.0)


def dilation(P, t: float, x) -> np.ndarray:
    """Image of ``x`` under y -> t y in the chart projecting from ``P``.

    Closed form in ambient coordinates; exact at the fixed points +-P.
    Any t > 0 is accepted, with dilation(P, 1/t) the inverse of dilation(P, t).
    """
    P = np.asarray(P, dtype=float)
    x = np.asarray(x, dtype=float)
    s = (x @ P)[..., None]
    w = x - s * P
    tt = t * t
    D = tt * (1.0 + s) + (1.0 - s)
    return (2.0 * t * w + (tt * (1.0 + s) - (1.0 - s)) * P) / D


def dilation_scale(P, t: float, x) -> np.ndarray:
    """Conformal factor rho of the dilation, so that dphi is rho times an isometry."""
    P = np.asarray(P, dtype=float)
    s = np.asarray(x, dtype=float) @ P
    return 2.0 * t / (t * t * (1.0 + s) + (1.0 - s))


def dilation_differential(P, t: float, x, v) -> np.ndarray:
    """Push forward tangent vectors ``v`` at ``x`` through the dilation."""
    P = np.asarray(P, dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    s = (x @ P)[..., None]
    ds = (v @ P)[..., None]
    w = x - s * P
    dw = v - ds * P
    tt = t * t
    D = tt * (1.0 + s) + (1.0 - s)
    phi = (2.0 * t * w + (tt * (1.0 + s) - (1.0 - s)) * P) / D
    dN = 2.0 * t * dw + (tt + 1.0) * ds * P
    dD = (tt - 1.0) * ds
    return (dN - phi * dD) / D


def conformal_map(p: BallParam, x) -> np.ndarray:
    """phi_{P,t}(x); the identity at p = 0."""
    if p.is_origin:
        return np.array(x, dtype=float, copy=True)
    return dilation(p.P, p.t, x)


def inverse_map(p: BallParam, x) -> np.ndarray:
    if p.is_origin:
        return np.array(x, dtype=float, copy=True)
    return dilation(p.P, 1.0 / p.t, x)


def conformal_jacobian(p: BallParam, x) -> np.ndarray:
    """|det dphi_{P,t}|(x) = rho(x)^n."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] - 1
    if p.is_origin:
        return np.ones(x.shape[:-1])
    return dilation_scale(p.P, p.t, x) ** n


def pullback_T(p: BallParam, u, n: int | None = None):
    """Weighted pullback x -> u(phi(x)) |det dphi|^{(n-4)/(2n)}.

    ``u`` is any callable taking an array of points.
    """

    def pulled(x):
        x = np.asarray(x, dtype=float)
        m = x.shape[-1] - 1 if n is None else n
        if p.is_origin:
            return u(x)
        expo = (m - 4) / (2.0 * m)
        return u(conformal_map(p, x)) * conformal_jacobian(p, x) ** expo

    return pulled


def xi_gradient(x, j: int) -> np.ndarray:
    """Tangential gradient e_j - x_j x of the coordinate function xi_j."""
    x = np.asarray(x, dtype=float)
    g = -x[..., j : j + 1] * x
    g[..., j] += 1.0
    return g
