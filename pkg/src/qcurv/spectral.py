"""Band-limited fields on S^n.

A backend couples a quadrature grid with an orthonormal basis of
Laplace-Beltrami eigenfunctions of degree <= L:

* ``AxisymBackend``: functions of x_{n+1} only, expanded in orthonormal
  Jacobi polynomials with weight (1 - mu^2)^{(n-2)/2};
* ``FullBackend``: restrictions of harmonic polynomials, built degree by
  degree from monomials and kept in monomial form so they can be evaluated
  anywhere.

Nonlinear operations are nodal followed by projection onto the basis.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import comb, eval_jacobi, gammaln

from .geometry import Dimension, laplace_eigenvalue, paneitz_symbol
from .quadrature import QuadratureError, QuadratureGrid, make_axisym_grid, make_full_grid

__all__ = [
    "Backend",
    "AxisymBackend",
    "FullBackend",
    "Field",
    "harmonic_dimension",
    "make_backend",
    "signed_pow",
    "abs_pow",
]

GRAM_TOL = 1e-8


def harmonic_dimension(n: int, k: int) -> int:
    """Dimension of degree-k spherical harmonics on S^n."""
    if k == 0:
        return 1
    if k == 1:
        return n + 1
    return int(comb(k + n, n, exact=True) - comb(k + n - 2, n, exact=True))


def signed_pow(u, q: float):
    """|u|^{q-1} u."""
    u = np.asarray(u, dtype=float)
    return np.abs(u) ** (q - 1.0) * u


def abs_pow(u, q: float):
    u = np.asarray(u, dtype=float)
    if q < 0 and np.any(u == 0.0):
        raise ZeroDivisionError("abs_pow with negative exponent at a zero node")
    return np.abs(u) ** q


class Backend:
    """Grid + orthonormal eigenbasis; the interface shared by both backends."""

    kind: str
    dim: Dimension
    L: int
    grid: QuadratureGrid
    degrees: np.ndarray

    # -- basic data ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.dim.n

    @property
    def size(self) -> int:
        return self.degrees.size

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @cached_property
    def lam(self) -> np.ndarray:
        return laplace_eigenvalue(self.dim, self.degrees).astype(float)

    def symbol(self, a: float = 1.0) -> np.ndarray:
        return paneitz_symbol(self.dim, self.degrees, a)

    @cached_property
    def B(self) -> np.ndarray:
        """Basis values at the grid nodes, shape (nodes, basis)."""
        return self.eval_basis(self.nodes)

    @cached_property
    def WB(self) -> np.ndarray:
        return self.weights[:, None] * self.B

    # -- transforms ---------------------------------------------------------

    def analyze(self, values) -> np.ndarray:
        return self.WB.T @ np.asarray(values, dtype=float)

    def synthesize(self, coeffs) -> np.ndarray:
        return self.B @ np.asarray(coeffs, dtype=float)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def evaluate(self, coeffs, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.n + 1)
        coeffs = np.asarray(coeffs, dtype=float)
        out = np.concatenate(
            [self.eval_basis(flat[i : i + 50_000]) @ coeffs for i in range(0, len(flat), 50_000)]
            or [np.zeros(0)]
        )
        return out.reshape(x.shape[:-1])

    def gram_deviation(self) -> float:
        G = self.B.T @ self.WB
        return float(np.max(np.abs(G - np.eye(self.size))))

    def check_gram(self):
        dev = self.gram_deviation()
        if dev > GRAM_TOL:
            raise QuadratureError(
                f"quadrature too coarse for band limit {self.L}: Gram deviation {dev:.2e}"
            )

    # -- hooks implemented by subclasses -----------------------------------

    def eval_basis(self, x) -> np.ndarray:
        raise NotImplementedError

    def xi_coeffs(self, j: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def active_axes(self) -> tuple[int, ...]:
        raise NotImplementedError

    def supports(self, P) -> bool:
        raise NotImplementedError

    def gradient_gram(self, density) -> np.ndarray:
        """C_ij = avg <grad xi_i, grad xi_j> * density (nodal density)."""
        raise NotImplementedError

    def refined(self, factor: float = 2.0) -> "Backend":
        raise NotImplementedError

    # -- derived ------------------------------------------------------------

    def residual_grid(self) -> QuadratureGrid:
        """Finer grid on which residual norms and gate integrals are reported."""
        raise NotImplementedError

    @property
    def t_max(self) -> float:
        """Largest dilation parameter resolved at this band limit."""
        return 1.0 + self.L / 16.0

    def field(self, values=None, coeffs=None) -> "Field":
        return Field(self, values=values, coeffs=coeffs)

    def from_function(self, fn: Callable) -> "Field":
        return Field(self, values=fn(self.nodes))

    def constant(self, c: float) -> "Field":
        # set spectrally: the first basis function is 1, and projecting nodal
        # values would leak round-off into modes the symbol amplifies
        coeffs = np.zeros(self.size)
        coeffs[0] = float(c)
        return Field(self, coeffs=coeffs)


class AxisymBackend(Backend):
    kind = "axisym"

    def __init__(self, dim: Dimension, L: int, K: int | None = None):
        if L < 1:
            raise ValueError("band limit must be >= 1")
        self.dim = dim
        self.L = int(L)
        self.K = int(K) if K is not None else max(3 * self.L + 1, 16)
        if 2 * self.K - 1 < 2 * self.L:
            raise QuadratureError("axisymmetric grid must integrate degree 2L exactly")
        self.grid = make_axisym_grid(dim, self.K)
        self.degrees = np.arange(self.L + 1)
        a = (dim.n - 2) / 2.0
        k = self.degrees.astype(float)
        log_h = (
            (2 * a + 1) * math.log(2.0)
            - np.log(2 * k + 2 * a + 1)
            + 2 * gammaln(k + a + 1)
            - gammaln(k + 2 * a + 1)
            - gammaln(k + 1)
        )
        log_mass = (2 * a + 1) * math.log(2.0) + 2 * gammaln(a + 1) - gammaln(2 * a + 2)
        self._norm = np.exp(-(log_h - log_mass) / 2.0)
        self._a = a

    def eval_basis(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        mu = x[..., -1]
        out = eval_jacobi(self.degrees, self._a, self._a, mu[..., None])
        return out * self._norm

    def eval_mu(self, coeffs, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        return (eval_jacobi(self.degrees, self._a, self._a, mu[..., None]) * self._norm) @ coeffs

    def xi_coeffs(self, j: int) -> np.ndarray:
        if j != self.n:
            raise ValueError("axisymmetric fields only carry the last coordinate")
        c = np.zeros(self.size)
        c[1] = 1.0 / self._norm[1] / eval_jacobi(1, self._a, self._a, 1.0)
        return c

    @property
    def active_axes(self) -> tuple[int, ...]:
        return (self.n,)

    def supports(self, P) -> bool:
        P = np.asarray(P, dtype=float)
        return bool(np.allclose(P[:-1], 0.0, atol=1e-14))

    def gradient_gram(self, density) -> np.ndarray:
        mu = self.grid.mu
        C = np.zeros((self.n + 1, self.n + 1))
        s = 1.0 - mu * mu
        side = self.integrate((1.0 - s / self.n) * density)
        C[np.arange(self.n), np.arange(self.n)] = side
        C[self.n, self.n] = self.integrate(s * density)
        return C

    def residual_grid(self) -> QuadratureGrid:
        return make_axisym_grid(self.dim, 2 * self.K)

    def refined(self, factor: float = 2.0) -> "AxisymBackend":
        return AxisymBackend(self.dim, self.L, int(math.ceil(self.K * factor)))


def _monomials(m: int, k: int) -> list[tuple[int, ...]]:
    out = []
    for combo in itertools.combinations_with_replacement(range(m), k):
        a = [0] * m
        for i in combo:
            a[i] += 1
        out.append(tuple(a))
    return out


class FullBackend(Backend):
    kind = "full"

    def __init__(
        self,
        dim: Dimension,
        L: int,
        oversample: float = 1.5,
        max_nodes: int = 400_000,
    ):
        self.dim = dim
        self.L = int(L)
        self.oversample = float(oversample)
        self.max_nodes = max_nodes
        self.grid = make_full_grid(dim, self.L, oversample, max_nodes)
        m = dim.n + 1
        self.monomials: list[tuple[int, ...]] = []
        for k in range(self.L + 1):
            self.monomials += _monomials(m, k)
        self._mono_index = {a: i for i, a in enumerate(self.monomials)}
        self._build()

    def _mono_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pw = [np.ones(x.shape)]
        for _ in range(self.L):
            pw.append(pw[-1] * x)
        pw = np.stack(pw)
        idx = np.arange(self.n + 1)
        cols = [np.prod(pw[list(a), ..., idx], axis=0) for a in self.monomials]
        return np.stack(cols, axis=-1)

    def _build(self):
        n, m = self.n, self.n + 1
        w = self.weights
        X = self._mono_values(self.nodes)
        nm = len(self.monomials)
        blocks_B = []
        blocks_C = []
        degrees = []
        # degree 0 and 1 fixed explicitly: 1 and sqrt(n+1) x_i
        C0 = np.zeros((nm, 1))
        C0[self._mono_index[(0,) * m], 0] = 1.0
        blocks_C.append(C0)
        degrees.append(0)
        if self.L >= 1:
            C1 = np.zeros((nm, m))
            for i in range(m):
                a = [0] * m
                a[i] = 1
                C1[self._mono_index[tuple(a)], i] = math.sqrt(m)
            blocks_C.append(C1)
            degrees += [1] * m
        Cm = np.concatenate(blocks_C, axis=1)
        Bv = X @ Cm
        for k in range(2, self.L + 1):
            cols = [self._mono_index[a] for a in _monomials(m, k)]
            E = np.zeros((nm, len(cols)))
            E[cols, np.arange(len(cols))] = 1.0
            R = X[:, cols]
            G = Bv.T @ (w[:, None] * R)
            R = R - Bv @ G
            E = E - Cm @ G
            sw = np.sqrt(w)[:, None]
            U, S, Vt = np.linalg.svd(sw * R, full_matrices=False)
            d = harmonic_dimension(n, k)
            if S.size > d and S[d] > 1e-8 * S[0]:
                raise QuadratureError(f"degree-{k} harmonic block not resolved by grid")
            V = Vt[:d].T / S[:d]
            Bv = np.concatenate([Bv, R @ V], axis=1)
            Cm = np.concatenate([Cm, E @ V], axis=1)
            degrees += [k] * d
        # one re-orthonormalisation pass removes round-off accumulated above
        G = Bv.T @ (w[:, None] * Bv)
        Lc = np.linalg.cholesky(G)
        T = np.linalg.inv(Lc).T
        deg = np.asarray(degrees)
        # keep the triangular correction inside degree blocks
        mask = deg[:, None] == deg[None, :]
        T = np.where(mask, T, 0.0)
        self.mono_coeffs = Cm @ T
        self.degrees = deg
        self.__dict__["B"] = Bv @ T
        self.check_gram()

    def eval_basis(self, x) -> np.ndarray:
        return self._mono_values(x) @ self.mono_coeffs

    def basis_polynomial(self, i: int) -> list:
        """Monomial expansion [(alpha, coeff), ...] of basis function i."""
        col = self.mono_coeffs[:, i]
        return [(a, float(c)) for a, c in zip(self.monomials, col) if abs(c) > 1e-15]

    def xi_coeffs(self, j: int) -> np.ndarray:
        c = np.zeros(self.size)
        c[1 + j] = 1.0 / math.sqrt(self.n + 1)
        return c

    @property
    def active_axes(self) -> tuple[int, ...]:
        return tuple(range(self.n + 1))

    def supports(self, P) -> bool:
        return True

    def gradient_gram(self, density) -> np.ndarray:
        x = self.nodes
        wd = self.weights * density
        total = wd.sum()
        return total * np.eye(self.n + 1) - (x * wd[:, None]).T @ x

    def residual_grid(self) -> QuadratureGrid:
        try:
            return make_full_grid(self.dim, self.L, self.oversample + 0.5, self.max_nodes)
        except QuadratureError:
            return self.grid

    def refined(self, factor: float = 2.0) -> "FullBackend":
        return FullBackend(self.dim, self.L, self.oversample * factor, self.max_nodes)


def make_backend(dim: Dimension, kind: str, L: int, **kw) -> Backend:
    if kind == "axisym":
        return AxisymBackend(dim, L, kw.get("K"))
    if kind == "full":
        return FullBackend(dim, L, kw.get("oversample", 1.5), kw.get("max_nodes", 400_000))
    raise ValueError(f"unknown backend {kind!r}")


@dataclass(eq=False)
class Field:
    """Band-limited function: nodal values and/or spectral coefficients.

    Whichever representation is missing is computed on first access and
    cached.  Fields are treated as values; operations return new fields.
    Values passed in that are not band limited are projected the first time
    coefficients are requested; ``values`` keeps the raw nodal data until
    ``project`` is called.
    """

    backend: Backend
    values: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    _fresh: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.values is None and self.coeffs is None:
            raise ValueError("field needs values or coefficients")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float).copy()
            self.values.setflags(write=False)
        if self.coeffs is not None:
            self.coeffs = np.asarray(self.coeffs, dtype=float).copy()
            self.coeffs.setflags(write=False)
        self._fresh = {"values": self.values is not None, "coeffs": self.coeffs is not None}

    @property
    def nodal(self) -> np.ndarray:
        if self.values is None:
            v = self.backend.synthesize(self.coeffs)
            v.setflags(write=False)
            self.values = v
            self._fresh["values"] = True
        return self.values

    @property
    def spectral(self) -> np.ndarray:
        if self.coeffs is None:
            c = self.backend.analyze(self.values)
            c.setflags(write=False)
            self.coeffs = c
            self._fresh["coeffs"] = True
        return self.coeffs

    @property
    def current(self) -> dict:
        return dict(self._fresh)

    def project(self) -> "Field":
        """Truncate to the band limit (nodal values replaced by synthesis)."""
        return Field(self.backend, coeffs=self.spectral)

    def copy(self) -> "Field":
        return Field(self.backend, values=self.values, coeffs=self.coeffs)

    def __call__(self, x) -> np.ndarray:
        return self.backend.evaluate(self.spectral, x)

    # spectral operators ---------------------------------------------------

    def laplacian(self) -> "Field":
        return Field(self.backend, coeffs=self.backend.lam * self.spectral)

    def paneitz(self, a: float = 1.0) -> "Field":
        return Field(self.backend, coeffs=self.backend.symbol(a) * self.spectral)

    # pointwise algebra ----------------------------------------------------

    def _binary(self, other, op) -> "Field":
        if isinstance(other, Field):
            if other.backend is not self.backend:
                raise ValueError("fields live on different backends")
            vals = op(self.nodal, other.nodal)
        else:
            vals = op(self.nodal, float(other))
        return Field(self.backend, values=vals).project()

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.backend, coeffs=-self.spectral)

    def signed_pow(self, q: float) -> "Field":
        if q <= 1.0:
            raise ValueError("signed_pow needs q > 1")
        return Field(self.backend, values=signed_pow(self.nodal, q)).project()

    def abs_pow(self, q: float) -> "Field":
        return Field(self.backend, values=abs_pow(self.nodal, q)).project()

    def pointwise(self, other, op: str, q: float | None = None) -> "Field":
        if op == "add":
            return self + other
        if op == "sub":
            return self - other
        if op == "mul":
            return self * other
        if op == "signed_pow":
            return self.signed_pow(q)
        if op == "abs_pow":
            return self.abs_pow(q)
        raise ValueError(f"unknown pointwise op {op!r}")

    # integrals ------------------------------------------------------------

    def mean(self) -> float:
        return self.backend.integrate(self.nodal)

    def integrate_nodal(self, values) -> float:
        return self.backend.integrate(values)

    def inner_products(self, other: "Field") -> tuple[float, float, float]:
        """(avg u v, avg <grad u, grad v>, avg Lap u Lap v), spectrally."""
        a, b = self.spectral, other.spectral
        lam = self.backend.lam
        return float(a @ b), float(lam * a @ b), float(lam * lam * a @ b)

    def decompose(self) -> tuple[float, np.ndarray, "Field"]:
        """u = mean + sum_i h_i xi_i + psi with psi orthogonal to 1, xi."""
        be = self.backend
        c = np.array(self.spectral)
        h = np.zeros(be.n + 1)
        mean = c[0]
        rest = c.copy()
        rest[0] = 0.0
        for j in be.active_axes:
            xc = be.xi_coeffs(j)
            norm2 = xc @ xc
            h[j] = (rest @ xc) / norm2
            rest = rest - h[j] * xc
        return float(mean), h, Field(be, coeffs=rest)

    def chopped(self, tol: float = 1e-14) -> "Field":
        """Drop whole degrees past the last one carrying a coefficient above
        tol * max|c|.  Removes the round-off plateau left by projecting a
        smooth function, which the fourth-order symbol would amplify."""
        c = np.array(self.spectral)
        big = np.abs(c) > tol * np.max(np.abs(c))
        if not big.any():
            return Field(self.backend, coeffs=c)
        kmax = int(self.backend.degrees[big].max())
        c[self.backend.degrees > kmax] = 0.0
        return Field(self.backend, coeffs=c)

    def resample(self, backend: Backend) -> "Field":
        """Same function on another backend's grid, projected there."""
        return Field(backend, values=self(backend.nodes)).project()

    def to_csv(self, path) -> None:
        be = self.backend
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(be.n + 1)] + ["weight", "value"])
            for x, wt, v in zip(be.nodes, be.weights, self.nodal):
                w.writerow([repr(float(c)) for c in x] + [repr(float(wt)), repr(float(v))])
