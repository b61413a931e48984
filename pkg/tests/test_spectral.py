import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from qcurv.geometry import make_dimension
from qcurv.quadrature import QuadratureError
from qcurv.spectral import (
    AxisymBackend,
    Field,
    FullBackend,
    abs_pow,
    harmonic_dimension,
    make_backend,
    signed_pow,
)

from oracles import poly_eval, poly_laplacian, zonal_paneitz

FULL_L = {5: 4, 6: 3, 8: 2}


@pytest.fixture(scope="module", params=[5, 6, 8])
def full(request):
    n = request.param
    return FullBackend(make_dimension(n), FULL_L[n])


def test_harmonic_dimension():
    assert [harmonic_dimension(2, k) for k in range(4)] == [1, 3, 5, 7]
    assert harmonic_dimension(6, 2) == 27


@pytest.mark.parametrize("n", [5, 6, 8])
def test_axisym_basis_is_paneitz_eigenbasis(n):
    d = make_dimension(n)
    be = AxisymBackend(d, 160)
    mu = be.grid.mu
    for k in range(be.L + 1):
        Pg, g = zonal_paneitz(n, d.c_n, d.d_n, k, mu)
        s = be.symbol()[k]
        assert np.max(np.abs(Pg - s * g)) / (s * np.max(np.abs(g))) < 1e-9
        # the basis function is a normalised multiple of the Jacobi polynomial
        b = be.B[:, k]
        scale = (g @ b) / (g @ g)
        assert np.max(np.abs(b - scale * g)) < 1e-9 * np.max(np.abs(b))


def test_full_basis_is_paneitz_eigenbasis(full):
    be = full
    d = be.dim
    z = np.random.default_rng(be.n).standard_normal((200, be.n + 1))
    x = z / np.linalg.norm(z, axis=1, keepdims=True)
    for i in range(be.size):
        p = be.basis_polynomial(i)
        lap = poly_laplacian(p, be.n)
        bilap = poly_laplacian(lap, be.n)
        e = poly_eval(p, x)
        P = poly_eval(bilap, x) + d.c_n * poly_eval(lap, x) + d.d_n * e
        s = be.symbol()[i]
        assert np.max(np.abs(P - s * e)) / (s * np.max(np.abs(e))) < 1e-9


def test_full_block_sizes(full):
    for k in range(full.L + 1):
        assert np.sum(full.degrees == k) == harmonic_dimension(full.n, k)


def test_gram(full, axis6):
    assert full.gram_deviation() < 1e-10
    assert axis6.gram_deviation() < 1e-10


def test_paneitz_on_coefficients_is_diagonal(axis6):
    rng = np.random.default_rng(0)
    c = rng.standard_normal(axis6.size)
    u = Field(axis6, coeffs=c)
    assert_allclose(u.paneitz().spectral, axis6.symbol() * c)
    assert_allclose(u.laplacian().spectral, axis6.lam * c)


def test_round_trip(axis6):
    rng = np.random.default_rng(1)
    c = rng.standard_normal(axis6.size) / (1 + axis6.degrees) ** 3
    assert_allclose(axis6.analyze(axis6.synthesize(c)), c, atol=1e-12)


def test_xi_coefficients(full):
    be = full
    x = be.nodes
    for j in be.active_axes:
        assert_allclose(be.synthesize(be.xi_coeffs(j)), x[:, j], atol=1e-12)


def test_axisym_supports_axis_only(axis6):
    e = np.zeros(7)
    e[-1] = 1.0
    assert axis6.supports(e) and axis6.supports(-e)
    assert not axis6.supports(np.eye(7)[0])
    assert axis6.active_axes == (6,)


def test_gradient_gram_matches_definition(full):
    # density 1: avg <grad xi_i, grad xi_j> = delta_ij * n/(n+1)
    be = full
    C = be.gradient_gram(np.ones(be.grid.size))
    assert_allclose(C, be.n / (be.n + 1) * np.eye(be.n + 1), atol=1e-12)


def test_axisym_gradient_gram(axis6):
    C = axis6.gradient_gram(np.ones(axis6.grid.size))
    assert_allclose(C[6, 6], 6 / 7, rtol=1e-12)


def test_field_arithmetic(axis6):
    x = axis6.nodes[:, -1]
    u = Field(axis6, values=1 + 0.1 * x)
    v = u * u - u
    assert_allclose(v.nodal, (1 + 0.1 * x) ** 2 - (1 + 0.1 * x), atol=1e-12)
    w = (u + 2.0).signed_pow(3.0)
    assert_allclose(w.nodal, (3 + 0.1 * x) ** 3, atol=1e-10)
    assert_allclose(u.mean(), 1.0, atol=1e-14)
    mean, h, psi = u.decompose()
    assert_allclose(mean, 1.0, atol=1e-14)
    assert_allclose(h[6], 0.1, atol=1e-13)
    assert np.max(np.abs(psi.spectral)) < 1e-13


def test_field_backends_must_match(axis6):
    other = AxisymBackend(axis6.dim, 20)
    with pytest.raises(ValueError):
        Field(axis6, coeffs=np.ones(axis6.size)) + Field(other, coeffs=np.ones(other.size))
    with pytest.raises(ValueError):
        Field(axis6)


def test_chopped_removes_plateau(axis6):
    from qcurv.geometry import dilation_scale

    P = np.zeros(7)
    P[-1] = 1.0
    rho = dilation_scale(P, 1.5, axis6.nodes)
    u = Field(axis6, values=rho).chopped()
    assert np.count_nonzero(u.spectral) < 40
    g = axis6.residual_grid()
    r = dilation_scale(P, 1.5, g.nodes)
    # rho^{(n-4)/2} = rho solves P u = d_n u^5 for n = 6
    Pu = axis6.evaluate(axis6.symbol() * u.spectral, g.nodes)
    assert np.max(np.abs(Pu - 24 * r**5)) < 1e-6


@given(st.floats(-3, 3), st.floats(1.5, 8))
def test_signed_and_abs_pow(u, q):
    assert_allclose(signed_pow(u, q), np.sign(u) * abs(u) ** q)
    assert_allclose(abs_pow(u, q), abs(u) ** q)


def test_abs_pow_negative_at_zero():
    with pytest.raises(ZeroDivisionError):
        abs_pow(np.array([0.0, 1.0]), -1.0)


def test_make_backend():
    d = make_dimension(5)
    assert make_backend(d, "axisym", 8).kind == "axisym"
    with pytest.raises(ValueError):
        make_backend(d, "other", 8)
    with pytest.raises(QuadratureError):
        AxisymBackend(d, 20, K=5)


def test_full_grid_cap():
    with pytest.raises(QuadratureError):
        FullBackend(make_dimension(8), 4, max_nodes=10_000)
