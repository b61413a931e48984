"""Independent reference computations used by several test modules."""

import math

import numpy as np
from scipy.special import beta, eval_jacobi, gammaln


def jacobi_derivative(k, a, m, x):
    """m-th derivative of P_k^{(a,a)} via the shifted-parameter identity."""
    if m > k:
        return np.zeros_like(x)
    log_c = gammaln(k + 2 * a + 1 + m) - gammaln(k + 2 * a + 1) - m * math.log(2.0)
    return math.exp(log_c) * eval_jacobi(k - m, a + m, a + m, x)


def zonal_paneitz(n, c_n, d_n, k, mu):
    """(P g, g) for g = P_k^{((n-2)/2,(n-2)/2)}(mu), with the Laplacian
    -(1-mu^2) g'' + n mu g' written out to fourth order."""
    a = (n - 2) / 2
    g = [jacobi_derivative(k, a, m, mu) for m in range(5)]
    s = 1 - mu**2
    lap = -s * g[2] + n * mu * g[1]
    h1 = 2 * mu * g[2] - s * g[3] + n * g[1] + n * mu * g[2]
    h2 = (2 + 2 * n) * g[2] + (4 + n) * mu * g[3] - s * g[4]
    bilap = -s * h2 + n * mu * h1
    return bilap + c_n * lap + d_n * g[0], g[0]


def poly_laplacian(terms, n):
    """Laplace-Beltrami (geometer's sign) of an ambient polynomial as a polynomial.

    On a degree-d homogeneous piece, Lap_S p = -Lap_R p + d(d+n-1) p.
    """
    out = {}
    for alpha, c in terms:
        alpha = tuple(alpha)
        d = sum(alpha)
        out[alpha] = out.get(alpha, 0.0) + d * (d + n - 1) * c
        for i, ai in enumerate(alpha):
            if ai >= 2:
                b = list(alpha)
                b[i] -= 2
                b = tuple(b)
                out[b] = out.get(b, 0.0) - ai * (ai - 1) * c
    return [(a, c) for a, c in out.items() if c != 0.0]


def poly_eval(terms, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1])
    for alpha, c in terms:
        out += c * np.prod(x ** np.asarray(alpha), axis=-1)
    return out


def expansion_coefficients(n):
    """Closed-form large-t coefficients via Beta integrals."""
    omega = lambda m: 2 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)
    r = omega(n - 1) / (n * omega(n))
    a1 = 2 ** (n + 1) * r * 0.5 * beta(n / 2 + 1, n / 2)
    a2 = 2 ** (n - 1) * r * 0.5 * (beta(n / 2 + 1, n / 2) - beta(n / 2 + 2, n / 2 - 1))
    return a1, a2


def radial_field(sign):
    """p -> p (degree +1) or p -> reflected p (degree -1)."""
    def F(p):
        p = np.asarray(p, dtype=float).copy()
        if sign < 0:
            p[0] = -p[0]
        return p
    return F
