import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horoflow.errors import GridMismatch, NonStarShaped, NotHConvex, ValidationFailed
from horoflow.hconvex import (
    RadialBody,
    SupportBody,
    assemble_A,
    embed,
    interpolate,
    is_hconvex,
    klein_project,
    minkowski,
    radial_from_support,
    random_body,
    random_radial_body,
    shifted_curvatures,
    sphere_support,
    support_from_radial,
)
from horoflow.quermass import curvature_integrals
from horoflow.sphere import SphereGrid, integrate

AXI = SphereGrid.axisymmetric(2, 256)
FULL = SphereGrid.full_s2(64, 128)


def perturbed(grid, eps=0.05):
    theta, _ = grid.mesh()
    return SupportBody(grid, 1.0 + eps * np.cos(theta))


def translated_sphere_rho(grid, r, d):
    """Exact geodesic radius of the ball of radius ``r`` centred at distance ``d`` on the axis."""
    theta, _ = grid.mesh()
    A = np.cosh(d)
    B = np.sinh(d) * np.cos(theta)
    beta = np.arctanh(B / A)
    return beta + np.arccosh(np.cosh(r) / np.sqrt(A**2 - B**2))


# ------------------------------------------------------------------ A-matrix


@pytest.mark.parametrize("grid", [AXI, FULL, SphereGrid.axisymmetric(4, 64)], ids=repr)
def test_sphere_A_lambda_area_exact(grid):
    r = 0.8
    b = SupportBody.sphere(grid, r)
    A = assemble_A(b)
    assert np.abs(A.xx - np.sinh(r)).max() < 1e-14
    assert np.abs(A.yy - np.sinh(r)).max() < 1e-14
    assert np.abs(shifted_curvatures(b) - np.exp(-r) / np.sinh(r)).max() < 1e-14
    assert np.abs(b.area_weight - np.sinh(r) ** grid.n).max() < 1e-13
    total = integrate(grid, b.area_weight)
    assert total == pytest.approx(np.sum(grid.weights) * np.sinh(r) ** grid.n, rel=1e-14)


def test_zero_support_is_degenerate():
    b = SupportBody(AXI, np.zeros(AXI.shape))
    assert np.abs(assemble_A(b).xx).max() == 0
    assert not is_hconvex(b)
    with pytest.raises(NotHConvex):
        b.require_hconvex()


def test_lambda_decreases_with_radius():
    lam = [float(shifted_curvatures(SupportBody.sphere(AXI, r))[0, 0]) for r in (0.5, 1, 2, 4, 8)]
    assert all(a > b > 0 for a, b in zip(lam, lam[1:]))


def _analytic_A_axisymmetric(theta, eps):
    phi = np.exp(1 + eps * np.cos(theta))
    p1 = -eps * np.sin(theta) * phi
    p2 = (eps**2 * np.sin(theta) ** 2 - eps * np.cos(theta)) * phi
    shift = -p1**2 / (2 * phi) + 0.5 * (phi - 1 / phi)
    return p2 + shift, np.cos(theta) / np.sin(theta) * p1 + shift


def test_A_matches_analytic_oracle_second_order():
    errs = []
    for nt in (64, 128):
        g = SphereGrid.axisymmetric(2, nt)
        A = assemble_A(perturbed(g))
        rad, tan = _analytic_A_axisymmetric(g.theta, 0.05)
        errs.append(max(np.abs(A.xx - rad).max(), np.abs(A.yy - tan).max()))
    assert np.log2(errs[0] / errs[1]) >= 1.9
    A = assemble_A(perturbed(FULL))
    theta, _ = FULL.mesh()
    rad, tan = _analytic_A_axisymmetric(theta, 0.05)
    assert np.abs(A.xx - rad).max() < 1e-5
    assert np.abs(A.yy - tan).max() < 1e-5
    assert np.abs(A.xy).max() < 1e-5


def test_support_lambda_matches_radial_weingarten():
    b = perturbed(FULL)
    r = radial_from_support(b)
    lam_s = b.lam
    lam_r = r.kappa - 1.0
    assert lam_r.min() == pytest.approx(lam_s.min(), rel=1e-3)
    assert lam_r.max() == pytest.approx(lam_s.max(), rel=1e-3)


# ------------------------------------------------------------------ embedding


def test_embed_sphere():
    r = 1.3
    pts = embed(SupportBody.sphere(FULL, r))
    e = FULL.directions()
    np.testing.assert_allclose(pts.X[..., :-1], -np.sinh(r) * e, atol=1e-14)
    np.testing.assert_allclose(pts.X[..., -1], np.cosh(r), rtol=1e-15)


@given(st.integers(0, 10_000), st.floats(0.3, 2.0))
def test_embedding_constraints(seed, r0):
    for grid in (SphereGrid.full_s2(16, 32), SphereGrid.axisymmetric(3, 48)):
        b = random_body(grid, seed, r0, 0.2)
        pts = embed(b)
        X, nu = pts.X, pts.nu
        null = np.concatenate([grid.directions(), np.ones(grid.shape + (1,))], axis=-1)
        scale = np.cosh(b.u).max()
        assert np.abs(minkowski(X, X) + 1).max() <= 1e-10 * scale**2
        assert np.abs(minkowski(nu, nu) - 1).max() <= 1e-10 * scale**2
        assert np.abs(minkowski(X, nu)).max() <= 1e-10 * scale**2
        assert np.abs(minkowski(X - nu, null)).max() <= 1e-10 * scale
        np.testing.assert_allclose(minkowski(X, null), -np.exp(b.u), rtol=1e-12)
        assert np.all(X[..., -1] > 0)


def test_embedding_tangents_orthogonal_to_normal():
    errs = []
    for nt in (64, 128):
        g = SphereGrid.axisymmetric(2, nt)
        pts = embed(perturbed(g))
        dX = np.gradient(pts.X, g.theta, axis=0)
        errs.append(np.abs(minkowski(dX, pts.nu))[2:-2].max())
    assert errs[1] < 1e-3
    assert errs[1] < errs[0]


def test_klein_projection():
    r = 0.9
    Y = klein_project(SupportBody.sphere(FULL, r))
    assert np.abs(np.linalg.norm(Y, axis=-1) - np.tanh(r)).max() < 1e-14
    b = random_body(FULL, 3, 1.0, 0.2)
    Y = klein_project(b)
    assert np.linalg.norm(Y, axis=-1).max() < 1
    X = embed(b).X
    back = np.concatenate([Y, np.ones(Y.shape[:-1] + (1,))], axis=-1) / np.sqrt(1 - np.sum(Y**2, -1))[..., None]
    assert np.abs(back - X).max() <= 1e-12 * np.abs(X).max()


# -------------------------------------------------------------- area element


@pytest.mark.parametrize("grid", [AXI, FULL], ids=repr)
def test_area_matches_radial_path(grid):
    b = perturbed(grid)
    r = radial_from_support(b)
    a_s = integrate(grid, b.area_weight)
    a_r = integrate(grid, r.area_weight)
    assert a_s == pytest.approx(a_r, rel=1e-3)


def test_area_weight_scales_with_A():
    b = perturbed(AXI)
    A = b.A
    scaled = (A * 2.0).det()
    np.testing.assert_allclose(scaled, 2.0**AXI.n * b.area_weight, rtol=1e-14)


# ---------------------------------------------------------------- conversions


@pytest.mark.parametrize("grid", [AXI, SphereGrid.full_s2(32, 64), SphereGrid.axisymmetric(3, 128)], ids=repr)
def test_sphere_conversions_are_exact(grid):
    b = support_from_radial(RadialBody.sphere(grid, 1.1))
    assert np.abs(b.u - 1.1).max() < 1e-12
    r = radial_from_support(SupportBody.sphere(grid, 1.1))
    assert np.abs(r.rho - 1.1).max() < 1e-12


@pytest.mark.parametrize("grid", [AXI, FULL], ids=repr)
def test_round_trip(grid):
    b = random_body(grid, 17, 1.0, 0.1)
    r = radial_from_support(b)
    back = radial_from_support(support_from_radial(r))
    assert np.abs(back.rho - r.rho).max() < 1e-3
    assert np.abs(support_from_radial(r).u - b.u).max() < 1e-3


def test_round_trip_converges_under_refinement():
    errs = []
    for nt in (64, 128):
        g = SphereGrid.axisymmetric(2, nt)
        theta = g.theta
        b = SupportBody(g, 1.0 + 0.08 * np.cos(theta) + 0.04 * np.cos(2 * theta) ** 2)
        errs.append(np.abs(support_from_radial(radial_from_support(b)).u - b.u).max())
    assert errs[1] <= errs[0] / 2 or errs[1] < 1e-10


def test_translated_sphere_support_brute_force():
    r, d = 1.0, 0.4
    u = sphere_support(AXI, r, d).u
    # dense meridian samples of the translated sphere
    t = np.linspace(0, 2 * np.pi, 400_001)
    ch, sh = np.cosh(d), np.sinh(d)
    centre_frame = np.stack([np.sinh(r) * np.sin(t), np.sinh(r) * np.cos(t), np.full_like(t, np.cosh(r))])
    boost = np.array([[1, 0, 0], [0, ch, sh], [0, sh, ch]])
    xi = boost @ centre_frame  # (x_radial, x_axis, x_0)
    e = AXI.directions()
    inner = e[:, 0:1] * xi[0][None, :] + e[:, -1:] * xi[1][None, :] - xi[2][None, :]
    brute = np.log(np.max(-inner, axis=1))
    assert np.abs(u - brute).max() < 1e-6


def test_translated_sphere_from_radial():
    r, d = 1.0, 0.4
    rho = translated_sphere_rho(AXI, r, d)
    b = support_from_radial(RadialBody(AXI, rho))
    assert np.abs(b.u - sphere_support(AXI, r, d).u).max() < 1e-6
    back = radial_from_support(sphere_support(AXI, r, d))
    assert np.abs(back.rho - rho).max() < 1e-6
    assert back.rho.max() == pytest.approx(r + d, abs=1e-3)
    assert back.rho.min() == pytest.approx(r - d, abs=1e-3)


def test_max_radius_matches_embedding_distance():
    # odd N puts a node on the equator, where this body attains its maximum
    g = SphereGrid.axisymmetric(2, 255)
    b = SupportBody(g, 1.0 + 0.1 * np.sin(g.theta) ** 2)
    r = radial_from_support(b)
    dist = np.arccosh(embed(b).X[..., -1])
    assert r.rho.max() == pytest.approx(dist.max(), abs=1e-6)
    # the minimum sits at a pole, which no node or node image hits: O(h^2) sampling
    assert r.rho.min() == pytest.approx(dist.min(), abs=2 * g.h**2)


def test_support_from_radial_validates():
    # a ball this small has A = sinh(rho) below the strictness margin
    with pytest.raises(ValidationFailed):
        support_from_radial(RadialBody.sphere(AXI, 1e-11))
    assert support_from_radial(RadialBody.sphere(AXI, 1e-3)).min_eig > 0


def test_radial_body_requires_positive_radius():
    with pytest.raises(NonStarShaped):
        RadialBody(AXI, np.zeros(AXI.shape))


def test_radial_curvatures_sphere():
    r = 0.7
    for g in (AXI, FULL):
        k = RadialBody.sphere(g, r).kappa
        assert np.abs(k - 1 / np.tanh(r)).max() < 1e-13


def test_curvature_integrals_agree_across_representations():
    for grid in (AXI, FULL):
        b = random_body(grid, 5, 1.0, 0.1)
        Vs = curvature_integrals(b)
        Vr = curvature_integrals(radial_from_support(b))
        np.testing.assert_allclose(Vs, Vr, rtol=1e-3)


# -------------------------------------------------------------- interpolation


def test_interpolation_endpoints_and_spheres():
    b0 = random_body(FULL, 1, 1.0, 0.1)
    b1 = random_body(FULL, 2, 1.5, 0.1)
    np.testing.assert_allclose(interpolate(b0, b1, 0.0).u, b0.u, atol=1e-15)
    np.testing.assert_allclose(interpolate(b0, b1, 1.0).u, b1.u, atol=1e-15)
    s = interpolate(SupportBody.sphere(AXI, 1.0), SupportBody.sphere(AXI, 2.0), 0.5)
    assert np.abs(s.u - np.log((np.e + np.e**2) / 2)).max() < 1e-15
    with pytest.raises(GridMismatch):
        interpolate(b0, SupportBody.sphere(AXI, 1.0), 0.5)
    with pytest.raises(ValueError):
        interpolate(b0, b1, 1.5)


@given(st.integers(0, 10_000), st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_interpolation_superadditive(s0, s1, t):
    g = SphereGrid.full_s2(16, 32)
    b0 = random_body(g, s0, 1.0, 0.3)
    b1 = random_body(g, s1, 1.4, 0.3)
    bt = interpolate(b0, b1, t)
    D = bt.A - ((1 - t) * b0.A + t * b1.A)
    assert D.min_eig().min() >= -1e-8
    assert is_hconvex(bt)


# ---------------------------------------------------------------- random bodies


def test_random_body_contract():
    for grid in (AXI, FULL, SphereGrid.axisymmetric(3, 64)):
        assert np.all(random_body(grid, 4, 1.2, 0.0).u == 1.2)
        b = random_body(grid, 4, 1.2, 0.3)
        assert b.min_eig >= 0.05 * np.sinh(1.2)
        assert np.array_equal(b.u, random_body(grid, 4, 1.2, 0.3).u)
        assert not np.array_equal(b.u, random_body(grid, 5, 1.2, 0.3).u)
    with pytest.raises(ValueError):
        random_body(AXI, 0, 1.0, 0.1, max_degree=5)


def test_random_radial_body_positive_sectional():
    b = random_radial_body(FULL, 9, 1.0, 0.2)
    k = b.kappa
    assert np.min(k[..., 0] * k[..., 1]) - 1 >= 0.05 / np.sinh(1.0) ** 2


def test_bodies_are_immutable():
    b = SupportBody.sphere(AXI, 1.0)
    with pytest.raises(ValueError):
        b.u[0] = 2.0
