"""Prescribed functions f given as polynomials in the ambient coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Dimension, tangent_basis

__all__ = ["FSpec", "preset", "PRESETS"]


@dataclass(frozen=True)
class FSpec:
    """f(x) = sum_k coeff_k * prod_i x_i^{alpha_k[i]} restricted to S^n."""

    n: int
    terms: tuple[tuple[tuple[int, ...], float], ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        merged: dict[tuple[int, ...], float] = {}
        for alpha, c in self.terms:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n + 1 or min(alpha) < 0:
                raise ValueError(f"bad multi-index {alpha} for n={self.n}")
            merged[alpha] = merged.get(alpha, 0.0) + float(c)
        terms = tuple(sorted((a, c) for a, c in merged.items() if c != 0.0))
        object.__setattr__(self, "terms", terms)

    # construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, n: int, value: float, name: str = "constant") -> "FSpec":
        return cls(n, (((0,) * (n + 1), value),), name)

    @classmethod
    def from_list(cls, n: int, raw, name: str = "custom") -> "FSpec":
        return cls(n, tuple((tuple(a), float(c)) for a, c in raw), name)

    def to_list(self) -> list:
        return [[list(a), c] for a, c in self.terms]

    def scaled_perturbation(self, base: float, eps: float) -> "FSpec":
        """base * (1 + eps * self)."""
        terms = [((0,) * (self.n + 1), base)]
        terms += [(a, base * eps * c) for a, c in self.terms]
        return FSpec(self.n, tuple(terms), self.name)

    @property
    def degree(self) -> int:
        return max((sum(a) for a, _ in self.terms), default=0)

    @property
    def band_limit(self) -> int:
        return self.degree

    @property
    def is_constant(self) -> bool:
        return all(sum(a) == 0 for a, _ in self.terms)

    def constant_value(self) -> float:
        return sum(c for a, c in self.terms if sum(a) == 0)

    def axis(self) -> int | None:
        """Index i if f depends on x_i alone (or is constant), else None."""
        used = {i for a, _ in self.terms for i, ai in enumerate(a) if ai}
        if not used:
            return self.n
        return used.pop() if len(used) == 1 else None

    def swapped(self, i: int, j: int) -> "FSpec":
        def sw(a):
            a = list(a)
            a[i], a[j] = a[j], a[i]
            return tuple(a)

        return FSpec(self.n, tuple((sw(a), c) for a, c in self.terms), self.name)

    # evaluation -----------------------------------------------------------

    def _powers(self, x):
        x = np.asarray(x, dtype=float)
        deg = max(self.degree, 1)
        pw = [np.ones(x.shape)]
        for _ in range(deg):
            pw.append(pw[-1] * x)
        return np.stack(pw)  # (deg+1, ..., n+1)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pw = self._powers(x)
        out = np.zeros(x.shape[:-1])
        idx = np.arange(self.n + 1)
        for alpha, c in self.terms:
            out += c * np.prod(pw[list(alpha), ..., idx], axis=0)
        return out

    def ambient_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pw = self._powers(x)
        out = np.zeros(x.shape)
        m = self.n + 1
        idx = np.arange(m)
        for alpha, c in self.terms:
            for i in range(m):
                if alpha[i] == 0:
                    continue
                a = list(alpha)
                a[i] -= 1
                out[..., i] += c * alpha[i] * np.prod(pw[a, ..., idx], axis=0)
        return out

    def ambient_hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = self.n + 1
        pw = self._powers(x)
        idx = np.arange(m)
        out = np.zeros(x.shape + (m,))
        for alpha, c in self.terms:
            for i in range(m):
                for j in range(i, m):
                    a = list(alpha)
                    if i == j:
                        if a[i] < 2:
                            continue
                        coef = a[i] * (a[i] - 1)
                        a[i] -= 2
                    else:
                        if a[i] == 0 or a[j] == 0:
                            continue
                        coef = a[i] * a[j]
                        a[i] -= 1
                        a[j] -= 1
                    v = c * coef * np.prod(pw[a, ..., idx], axis=0)
                    out[..., i, j] += v
                    if i != j:
                        out[..., j, i] += v
        return out

    def sphere_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = self.ambient_gradient(x)
        return g - np.sum(g * x, axis=-1, keepdims=True) * x

    def sphere_laplacian(self, x) -> np.ndarray:
        """Laplace-Beltrami with the geometer's sign (positive on xi_i)."""
        x = np.asarray(x, dtype=float)
        g = self.ambient_gradient(x)
        H = self.ambient_hessian(x)
        tr = np.trace(H, axis1=-2, axis2=-1)
        radial = np.einsum("...i,...ij,...j->...", x, H, x)
        return -(tr - self.n * np.sum(g * x, axis=-1) - radial)

    def chart_derivatives(self, P):
        """Gradient, Hessian and Laplacian at 0 of f composed with the chart
        inverse z -> (2Qz + (1-|z|^2)P)/(1+|z|^2), Q = tangent_basis(P)."""
        P = np.asarray(P, dtype=float)
        Q = tangent_basis(P)
        g = self.ambient_gradient(P)
        H = self.ambient_hessian(P)
        grad = 2.0 * Q.T @ g
        hess = 4.0 * Q.T @ H @ Q - 4.0 * (g @ P) * np.eye(self.n)
        return grad, hess, float(np.trace(hess))

    def sup_deviation(self, dim: Dimension, nodes) -> float:
        return float(np.max(np.abs(self(nodes) - dim.f0)))


def _linear(n, i):
    a = [0] * (n + 1)
    a[i] = 1
    return tuple(a)


def _square(n, i):
    a = [0] * (n + 1)
    a[i] = 2
    return tuple(a)


def generic_weights(n: int) -> np.ndarray:
    """Distinct weights a_i for the generic quadratic preset."""
    a = np.array([(i + 1) ** 1.3 for i in range(n + 1)], dtype=float)
    a /= a.sum()
    return a


def preset(name: str, dim: Dimension, eps: float = 0.03, **kw) -> FSpec:
    """Named families used throughout tests and the command line.

    constant      f = c (default f0)
    kw            f0 (1 + eps xi_i), i = ``axis`` (default 0)
    quadratic     f0 (1 + eps sum a_i x_i^2) with distinct a_i
    axis          f0 (1 + eps (x_{n+1}^2 - 1/(n+1)))
    axis_skew     f0 (1 + eps (x_{n+1}^2 + 0.3 x_{n+1} - 1/(n+1)))
    cubic         f0 (1 + eps (x_1^3 - 3 x_1 x_2^2))
    """
    n = dim.n
    f0 = dim.f0
    if name == "constant":
        return FSpec.constant(n, kw.get("value", f0))
    if name == "kw":
        i = kw.get("axis", 0)
        return FSpec(n, (((0,) * (n + 1), f0), (_linear(n, i), f0 * eps)), "kw")
    if name == "quadratic":
        a = np.asarray(kw.get("weights", generic_weights(n)), dtype=float)
        terms = [((0,) * (n + 1), f0)] + [(_square(n, i), f0 * eps * a[i]) for i in range(n + 1)]
        return FSpec(n, tuple(terms), "quadratic")
    if name == "axis":
        return FSpec(
            n,
            (((0,) * (n + 1), f0 * (1 - eps / (n + 1))), (_square(n, n), f0 * eps)),
            "axis",
        )
    if name == "axis_skew":
        b = kw.get("skew", 0.3)
        return FSpec(
            n,
            (
                ((0,) * (n + 1), f0 * (1 - eps / (n + 1))),
                (_square(n, n), f0 * eps),
                (_linear(n, n), f0 * eps * b),
            ),
            "axis_skew",
        )
    if name == "cubic":
        a3 = [0] * (n + 1)
        a3[0] = 3
        a12 = [0] * (n + 1)
        a12[0], a12[1] = 1, 2
        return FSpec(
            n,
            (((0,) * (n + 1), f0), (tuple(a3), f0 * eps), (tuple(a12), -3 * f0 * eps)),
            "cubic",
        )
    raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")


PRESETS = ("constant", "kw", "quadratic", "axis", "axis_skew", "cubic")
