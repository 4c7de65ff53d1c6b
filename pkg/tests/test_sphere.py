from math import pi

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horoflow.errors import GridMismatch
from horoflow.sphere import (
    FieldInterpolator,
    SphereGrid,
    covariant_hessian,
    gradient_norm2,
    harmonic,
    integrate,
    laplacian,
    sphere_area,
)


def order(e_coarse, e_fine):
    return np.log2(e_coarse / e_fine)


def test_sphere_area_values():
    assert sphere_area(1) == pytest.approx(2 * pi)
    assert sphere_area(2) == pytest.approx(4 * pi)
    assert sphere_area(3) == pytest.approx(2 * pi**2)


@pytest.mark.parametrize(
    "grid",
    [SphereGrid.axisymmetric(2, 64), SphereGrid.axisymmetric(3, 65), SphereGrid.axisymmetric(5, 256), SphereGrid.full_s2(16, 32), SphereGrid.full_s2()],
    ids=repr,
)
def test_weights_sum_to_sphere_area(grid):
    assert np.sum(grid.weights) == pytest.approx(sphere_area(grid.n), rel=1e-10)
    assert np.all(grid.weights > 0)
    assert grid.theta.min() > 0 and grid.theta.max() < pi


def test_grid_validation():
    with pytest.raises(ValueError):
        SphereGrid.full_s2(16, 31)
    with pytest.raises(ValueError):
        SphereGrid.axisymmetric(1, 32)
    g = SphereGrid.axisymmetric(2, 32)
    with pytest.raises(GridMismatch):
        integrate(g, np.ones(31))


def test_integrate_examples():
    g = SphereGrid.full_s2()
    theta, _ = g.mesh()
    assert integrate(g, np.ones(g.shape)) == pytest.approx(4 * pi, rel=1e-10)
    assert abs(integrate(g, np.cos(theta))) <= 1e-10
    assert integrate(g, np.cos(theta) ** 2) == pytest.approx(4 * pi / 3, rel=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_integrate_zonal_harmonics_vanish(n):
    g = SphereGrid.axisymmetric(n, 128)
    for l in range(1, 5):
        assert abs(integrate(g, harmonic(g, l))) <= 1e-8


def test_integrate_full_harmonics_vanish():
    g = SphereGrid.full_s2(32, 64)
    for l in range(1, 5):
        for m in range(-l, l + 1):
            assert abs(integrate(g, harmonic(g, l, m))) <= 1e-8


def test_hessian_of_constant_vanishes():
    for g in (SphereGrid.axisymmetric(3, 32), SphereGrid.full_s2(16, 32)):
        H = covariant_hessian(g, np.full(g.shape, 2.5))
        assert np.abs(H.xx).max() == 0
        assert np.abs(H.yy).max() == 0


def test_full_laplacian_of_first_harmonic():
    errs = []
    for nt in (32, 64):
        g = SphereGrid.full_s2(nt, 2 * nt)
        theta, _ = g.mesh()
        lap = laplacian(g, np.cos(theta))
        errs.append(np.abs(lap + 2 * np.cos(theta)).max())
    assert errs[1] < 1e-3
    assert order(*errs) >= 1.9


def test_axisymmetric_hessian_first_harmonic_n3():
    errs = []
    for nt in (64, 128):
        g = SphereGrid.axisymmetric(3, nt)
        c = np.cos(g.theta)
        H = covariant_hessian(g, c)
        errs.append(max(np.abs(H.xx + c).max(), np.abs(H.yy + c).max(), np.abs(laplacian(g, c) + 3 * c).max()))
    assert errs[1] < 1e-3
    assert order(*errs) >= 1.9


@pytest.mark.parametrize("n", [2, 3])
def test_zonal_laplacian_eigenfunctions_converge(n):
    for l in (1, 2, 3, 4):
        errs = []
        for nt in (64, 128):
            g = SphereGrid.axisymmetric(n, nt)
            y = harmonic(g, l)
            errs.append(np.abs(laplacian(g, y) + l * (l + n - 1) * y).max())
        assert order(*errs) >= 1.9


def test_full_laplacian_eigenfunctions_converge():
    for l, m in [(1, 1), (2, -1), (2, 2), (3, 0), (4, 3)]:
        errs = []
        for nt in (32, 64):
            g = SphereGrid.full_s2(nt, 2 * nt)
            y = harmonic(g, l, m)
            errs.append(np.abs(laplacian(g, y) + l * (l + 1) * y).max())
        assert order(*errs) >= 1.9


def test_gradient_norm_examples():
    g = SphereGrid.full_s2(64, 128)
    theta, phi = g.mesh()
    assert np.abs(gradient_norm2(g, np.full(g.shape, 3.0))).max() == 0
    assert np.abs(gradient_norm2(g, np.cos(theta)) - np.sin(theta) ** 2).max() < 1e-5
    s = np.sin(theta) * np.cos(phi)
    exact = np.cos(theta) ** 2 * np.cos(phi) ** 2 + np.sin(phi) ** 2
    assert np.abs(gradient_norm2(g, s) - exact).max() < 1e-5
    ga = SphereGrid.axisymmetric(2, 256)
    assert np.abs(gradient_norm2(ga, np.cos(ga.theta)) - np.sin(ga.theta) ** 2).max() < 1e-4


def test_stokes_integral_of_laplacian():
    g = SphereGrid.full_s2(64, 128)
    theta, phi = g.mesh()
    s = np.exp(0.3 * np.sin(theta) * np.cos(phi) + 0.2 * np.cos(theta) ** 2)
    assert abs(integrate(g, laplacian(g, s))) < 1e-4
    ga = SphereGrid.axisymmetric(3, 256)
    s = np.exp(0.4 * np.cos(ga.theta))
    assert abs(integrate(ga, laplacian(ga, s))) < 1e-4


def test_tensor_eigen_and_det_consistency():
    g = SphereGrid.full_s2(16, 32)
    theta, phi = g.mesh()
    H = covariant_hessian(g, np.sin(theta) ** 2 * np.cos(2 * phi) + np.cos(theta))
    ev = H.eigvals()
    assert np.all(ev[..., 0] <= ev[..., 1])
    np.testing.assert_allclose(ev.sum(-1), H.trace(), atol=1e-10)
    np.testing.assert_allclose(ev.prod(-1), H.det(), atol=1e-8)


@given(st.floats(0.05, pi - 0.05), st.floats(0, 2 * pi))
def test_interpolator_reproduces_smooth_field(theta, phi):
    g = SphereGrid.full_s2(32, 64)
    t, p = g.mesh()
    f = lambda a, b: np.exp(np.sin(a) * np.cos(b)) + np.cos(a)
    interp = FieldInterpolator(g, f(t, p))
    assert float(interp(theta, phi)) == pytest.approx(f(theta, phi), abs=1e-6)


def test_interpolator_axisymmetric_derivatives():
    g = SphereGrid.axisymmetric(3, 128)
    interp = FieldInterpolator(g, np.cos(g.theta) ** 3)
    x = np.linspace(0, pi, 41)
    assert np.abs(interp(x) - np.cos(x) ** 3).max() < 1e-8
    assert np.abs(interp(x, dtheta=1) + 3 * np.cos(x) ** 2 * np.sin(x)).max() < 1e-6


def test_refine_and_h_law():
    g = SphereGrid.axisymmetric(2, 64)
    assert g.refine().n_theta == 128
    assert g.refine().h == pytest.approx(g.h / 2)
