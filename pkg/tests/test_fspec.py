import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from qcurv.fspec import PRESETS, FSpec, generic_weights, preset
from qcurv.geometry import make_dimension, stereo_inverse, tangent_basis


def pts(m, k, seed=0):
    z = np.random.default_rng(seed).standard_normal((k, m))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def test_terms_merge_and_sort():
    f = FSpec(2, (((1, 0, 0), 1.0), ((0, 0, 0), 2.0), ((1, 0, 0), -1.0)))
    assert f.terms == (((0, 0, 0), 2.0),)
    assert f.is_constant and f.constant_value() == 2.0
    with pytest.raises(ValueError):
        FSpec(2, (((1, 0), 1.0),))


def test_roundtrip_list():
    d = make_dimension(6)
    f = preset("quadratic", d)
    assert FSpec.from_list(6, f.to_list()) == f


def test_axis_and_swap():
    d = make_dimension(6)
    assert preset("axis", d).axis() == 6
    assert preset("quadratic", d).axis() is None
    kw = preset("kw", d, eps=0.05)
    assert kw.axis() == 0
    x = pts(7, 10)
    sw = kw.swapped(0, 6)
    assert_allclose(sw(x[:, [6, 1, 2, 3, 4, 5, 0]]), kw(x))


@pytest.mark.parametrize("name", PRESETS)
def test_presets_positive_and_close_to_f0(name):
    d = make_dimension(6)
    f = preset(name, d)
    v = f(pts(7, 500))
    assert v.min() > 0
    assert np.max(np.abs(v - d.f0)) <= 0.1 * d.f0


def test_preset_unknown():
    with pytest.raises(KeyError):
        preset("nope", make_dimension(5))


def test_generic_weights_distinct():
    a = generic_weights(6)
    assert_allclose(a.sum(), 1.0)
    assert len(set(np.round(a, 12))) == 7


@given(st.integers(0, 1000))
def test_gradient_finite_difference(seed):
    f = preset("cubic", make_dimension(5), eps=0.5)
    x = np.random.default_rng(seed).standard_normal(6)
    h = 1e-6
    fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(6)])
    assert_allclose(f.ambient_gradient(x), fd, atol=1e-6 * max(1, np.abs(fd).max()))
    Hfd = np.array([(f.ambient_gradient(x + h * e) - f.ambient_gradient(x - h * e)) / (2 * h) for e in np.eye(6)])
    assert_allclose(f.ambient_hessian(x), Hfd, atol=1e-5 * max(1, np.abs(Hfd).max()))


@pytest.mark.parametrize("n", [5, 6, 8])
def test_laplacian_on_harmonics(n):
    # xi_1 xi_2 is a degree-2 harmonic: eigenvalue 2(n+1); xi_1: n
    a = [0] * (n + 1)
    a[0] = a[1] = 1
    f = FSpec(n, ((tuple(a), 1.0),))
    x = pts(n + 1, 20, n)
    assert_allclose(f.sphere_laplacian(x), 2 * (n + 1) * x[:, 0] * x[:, 1], atol=1e-13)
    lin = FSpec(n, ((tuple([1] + [0] * n), 1.0),))
    assert_allclose(lin.sphere_laplacian(x), n * x[:, 0], atol=1e-13)


def test_laplacian_finite_difference_chart():
    # Laplace-Beltrami from a chart: -(1+|y|^2)^2/4 * (flat Laplacian) at the chart centre
    n = 6
    f = preset("quadratic", make_dimension(n), eps=1.0)
    P = pts(n + 1, 1, 5)[0]
    h = 1e-4
    g = lambda y: f(stereo_inverse(-P, y))
    lap = sum((g(h * e) - 2 * g(np.zeros(n)) + g(-h * e)) / h**2 for e in np.eye(n))
    assert_allclose(f.sphere_laplacian(P), -lap / 4, rtol=1e-5)


def test_chart_derivatives_finite_difference():
    n = 5
    f = preset("cubic", make_dimension(n), eps=1.0)
    P = pts(n + 1, 1, 2)[0]
    Q = tangent_basis(P)
    chart = lambda z: f((2 * Q @ z + (1 - z @ z) * P) / (1 + z @ z))
    grad, hess, lap = f.chart_derivatives(P)
    h = 1e-5
    E = np.eye(n)
    fd = np.array([(chart(h * e) - chart(-h * e)) / (2 * h) for e in E])
    assert_allclose(grad, fd, atol=1e-7)
    H = np.array([[(chart(h * (a + b)) - chart(h * (a - b)) - chart(h * (b - a)) + chart(-h * (a + b))) / (4 * h * h)
                   for b in E] for a in E])
    assert_allclose(hess, H, atol=1e-4)
    assert_allclose(lap, np.trace(hess))
