import numpy as np
import pytest
from numpy.testing import assert_allclose

from qcurv.fspec import FSpec, preset
from qcurv.functionals import (
    DegenerateInput,
    aubin_probe,
    energy,
    kw_residual,
    pde_residual,
    quotient_Jaq,
    quotient_Jbar,
    sobolev_probe,
)
from qcurv.geometry import BallParam, dilation_scale, make_dimension
from qcurv.spectral import AxisymBackend, Field


def test_energy_of_constant(axis6):
    e = energy(axis6.constant(2.0))
    assert e.biharm == 0.0 and e.grad == 0.0
    assert_allclose(e.mass, 4 * axis6.dim.d_n)


def test_energy_of_coordinate(axis6):
    # avg xi^2 = 1/(n+1), Lap xi = n xi
    u = Field(axis6, values=axis6.nodes[:, -1])
    e = energy(u)
    assert_allclose(e.biharm, 36 / 7, rtol=1e-12)
    assert_allclose(e.grad, 10 * 6 / 7, rtol=1e-12)
    assert_allclose(e.total(0.5), 0.5 * (36 + 60) / 7 + 24 / 7, rtol=1e-12)


def test_quotient_of_constant(axis6):
    d = axis6.dim
    assert_allclose(quotient_Jaq(axis6.constant(3.0), 1.0, d.two_sharp), d.d_n, rtol=1e-12)
    f = FSpec.constant(6, d.f0)
    J = quotient_Jbar(axis6.constant(1.0), BallParam.origin(7), f)
    assert_allclose(J, d.d_n / d.f0 ** (2 / d.two_sharp), rtol=1e-12)


def test_quotient_rejects(axis6):
    with pytest.raises(ValueError):
        quotient_Jaq(axis6.constant(1.0), 1.0, 7.0)
    with pytest.raises(ValueError):
        quotient_Jaq(axis6.constant(1.0), 0.0, 6.0)
    with pytest.raises(DegenerateInput):
        quotient_Jaq(axis6.constant(0.0), 1.0, 6.0)
    with pytest.raises(DegenerateInput):
        quotient_Jbar(axis6.constant(1.0), BallParam.origin(7), FSpec.constant(6, -1.0))


@pytest.mark.parametrize("n", [5, 6, 8])
def test_constant_solution_residual(n):
    d = make_dimension(n)
    be = AxisymBackend(d, 40)
    c = 17.0
    u = be.constant((d.f0 / c) ** ((n - 4) / 8))
    r = pde_residual(u, c)
    assert r.sup < 1e-10
    assert np.max(np.abs(kw_residual(u, FSpec.constant(n, c)))) == 0.0


def test_bubble_residual(axis6):
    P = np.zeros(7)
    P[-1] = -1.0
    u = Field(axis6, values=dilation_scale(P, 2.0, axis6.nodes)).chopped()
    f = FSpec.constant(6, axis6.dim.f0)
    assert pde_residual(u, f).sup < 1e-5
    assert np.max(np.abs(kw_residual(u, f))) < 1e-12


def test_residual_accepts_callables(axis6):
    u = axis6.constant(1.0)
    r1 = pde_residual(u, 24.0)
    r2 = pde_residual(u, lambda x: np.full(x.shape[:-1], 24.0))
    assert r1.sup < 1e-12 and r2.sup < 1e-12


def test_kw_residual_of_linear_f():
    # u = 1, f = f0 (1 + eps xi): component = eps f0 avg(1 - xi^2) = eps f0 n/(n+1)
    d = make_dimension(6)
    be = AxisymBackend(d, 16)
    f = preset("kw", d, eps=0.05, axis=6)
    kw = kw_residual(be.constant(1.0), f)
    assert_allclose(kw[6], 0.05 * 24 * 6 / 7, rtol=1e-12)
    assert np.all(kw[:6] == 0)


def test_sobolev_probe_above_constant(axis6):
    vals = sobolev_probe(AxisymBackend(axis6.dim, 24), count=60, seed=2)
    assert vals.min() >= axis6.dim.d_n - 1e-9


def test_aubin_probe_small():
    d = make_dimension(6)
    rep = aubin_probe(d, starts=4, seed=3)
    assert rep.passed
    assert all(rep.converged)
    assert abs(rep.best - d.d_n) < 1e-6


def test_aubin_probe_rejects():
    d = make_dimension(6)
    with pytest.raises(ValueError):
        aubin_probe(d, a=1.5, starts=1)
    with pytest.raises(ValueError):
        aubin_probe(d, q=2.0, starts=1)
