import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qcurv.geometry import make_dimension
from qcurv.quadrature import (
    QuadratureError,
    full_grid_size,
    make_axisym_grid,
    make_full_grid,
    monomial_moment,
    sphere_rule,
    zonal_rule,
)


def test_monomial_moment_values():
    # avg x_1^2 over S^n is 1/(n+1); avg x_1^4 = 3/((n+1)(n+3))
    assert_allclose(monomial_moment([2, 0, 0]), 1 / 3)
    assert_allclose(monomial_moment([4, 0, 0, 0, 0, 0, 0]), 3 / (7 * 9))
    assert_allclose(monomial_moment([2, 2, 0]), 1 / 15)
    assert monomial_moment([1, 0, 0]) == 0.0
    assert_allclose(monomial_moment([0, 0, 0]), 1.0)


@pytest.mark.parametrize("m,degree", [(2, 3), (2, 6), (4, 3), (4, 4), (5, 6), (6, 5)])
def test_sphere_rule_exact(m, degree):
    nodes, w = sphere_rule(m, degree)
    assert_allclose(w.sum(), 1.0)
    for alpha in itertools.product(range(degree + 1), repeat=m + 1):
        if sum(alpha) > degree:
            continue
        val = w @ np.prod(nodes ** np.array(alpha), axis=1)
        assert abs(val - monomial_moment(alpha)) < 1e-13


def test_sphere_rule_readonly():
    nodes, w = sphere_rule(3, 4)
    with pytest.raises(ValueError):
        nodes[0, 0] = 1.0


def test_axisym_grid_exact():
    d = make_dimension(6)
    g = make_axisym_grid(d, 20)
    for k in range(0, 39, 2):
        alpha = [0] * 6 + [k]
        assert abs(g.integrate(g.mu**k) - monomial_moment(alpha)) < 1e-14
    with pytest.raises(ValueError):
        make_axisym_grid(d, 3)


def test_full_grid_and_cap():
    d = make_dimension(5)
    g = make_full_grid(d, 3)
    assert g.size == full_grid_size(5, 6)
    assert g.exactness_degree == 6
    with pytest.raises(QuadratureError):
        make_full_grid(d, 20, max_nodes=1000)
    with pytest.raises(ValueError):
        make_full_grid(d, 1)


@pytest.mark.parametrize("t", [1.0, 8.0, 300.0])
def test_zonal_rule_integrates_polynomials(t):
    n = 6
    P = np.ones(n + 1) / np.sqrt(n + 1)
    nodes, w = zonal_rule(n, P, t, 4, 0.1)
    assert_allclose(w.sum(), 1.0, atol=1e-13)
    x = nodes
    assert abs(w @ x[:, 0] ** 2 - 1 / 7) < 1e-13
    assert abs(w @ (x[:, 0] ** 2 * x[:, 3] ** 2) - 1 / 63) < 1e-13
    assert abs(w @ x[:, 2]) < 1e-13
