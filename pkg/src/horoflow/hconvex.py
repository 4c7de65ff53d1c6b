"""Horospherically convex bodies in hyperbolic space.

A body is stored either by its horospherical support function ``u`` on the
sphere (:class:`SupportBody`) or by the geodesic radius ``rho`` of its
boundary as a graph over the sphere (:class:`RadialBody`).  Points of
hyperbolic space live on the hyperboloid ``<X, X> = -1`` in Minkowski space
with the time coordinate stored last.

With ``phi = exp(u)`` the A-matrix is

    A = Hess(phi) - |grad phi|^2 / (2 phi) g + (phi - 1/phi) / 2 g,

the body is strictly h-convex when ``A`` is positive definite, and the
shifted principal curvatures are ``lambda_i = exp(-u) / a_i`` where ``a_i``
are the eigenvalues of ``A``.  The induced area element is ``det(A) dsigma``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.spatial import cKDTree

from .errors import FailedAfter30Halvings, GridMismatch, NonStarShaped, NotHConvex, ValidationFailed
from .sphere import (
    FieldInterpolator,
    SphereGrid,
    gradient_and_hessian,
    harmonic,
)

__all__ = [
    "HCONVEX_MARGIN",
    "SupportBody",
    "RadialBody",
    "MinkowskiPointField",
    "minkowski",
    "assemble_A",
    "is_hconvex",
    "shifted_curvatures",
    "embed",
    "area_element",
    "klein_project",
    "support_from_radial",
    "radial_from_support",
    "interpolate",
    "random_body",
    "random_radial_body",
    "sphere_support",
    "radial_curvatures",
    "radial_area_element",
]

HCONVEX_MARGIN = 1e-10


def minkowski(a, b):
    """Minkowski product with signature ``(+, ..., +, -)`` along the last axis."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.sum(a[..., :-1] * b[..., :-1], axis=-1) - a[..., -1] * b[..., -1]


@dataclass(frozen=True, eq=False)
class SupportBody:
    """Samples of the horospherical support function ``u`` on a grid."""

    grid: SphereGrid
    u: np.ndarray

    def __post_init__(self):
        u = self.grid.check(self.u).copy()
        if not np.all(np.isfinite(u)):
            raise ValueError("support function has non-finite values")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def sphere(cls, grid, r):
        return cls(grid, np.full(grid.shape, float(r)))

    @classmethod
    def from_phi(cls, grid, phi):
        return cls(grid, np.log(phi))

    @cached_property
    def phi(self):
        return np.exp(self.u)

    @cached_property
    def _phi_derivatives(self):
        return gradient_and_hessian(self.grid, self.phi)

    @property
    def grad_phi(self):
        return self._phi_derivatives[0]

    @property
    def hess_phi(self):
        return self._phi_derivatives[1]

    @cached_property
    def grad_u(self):
        """Frame components of the gradient of ``u`` (as ``grad phi / phi``)."""
        return tuple(c / self.phi for c in self.grad_phi)

    @cached_property
    def A(self):
        phi = self.phi
        g2 = sum(c**2 for c in self.grad_phi)
        return self.hess_phi.plus_identity(-g2 / (2.0 * phi) + 0.5 * (phi - 1.0 / phi))

    @cached_property
    def a(self):
        """Eigenvalues of ``A`` relative to the round metric, ascending."""
        return self.A.eigvals()

    @property
    def min_eig(self):
        return float(self.a[..., 0].min())

    def require_hconvex(self, margin=HCONVEX_MARGIN, error=NotHConvex):
        m = self.min_eig
        if not m > margin:
            raise error(f"A is not positive definite (min eigenvalue {m:.3e})")
        return self

    @cached_property
    def lam(self):
        """Shifted principal curvatures, ascending, shape ``grid.shape + (n,)``."""
        self.require_hconvex()
        return np.exp(-self.u)[..., None] / self.a[..., ::-1]

    @cached_property
    def kappa(self):
        return self.lam + 1.0

    @cached_property
    def area_weight(self):
        self.require_hconvex()
        return self.A.det()


@dataclass(frozen=True, eq=False)
class RadialBody:
    """Boundary written as ``rho(omega) * omega`` in geodesic polar coordinates."""

    grid: SphereGrid
    rho: np.ndarray

    def __post_init__(self):
        rho = self.grid.check(self.rho).copy()
        if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
            raise NonStarShaped("geodesic radius must be positive and finite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def sphere(cls, grid, r):
        return cls(grid, np.full(grid.shape, float(r)))

    @cached_property
    def _derivatives(self):
        return gradient_and_hessian(self.grid, self.rho)

    @cached_property
    def v(self):
        """``sqrt(1 + |grad rho|^2 / sinh(rho)^2)``."""
        g2 = sum(c**2 for c in self._derivatives[0])
        return np.sqrt(1.0 + g2 / np.sinh(self.rho) ** 2)

    @cached_property
    def kappa(self):
        """Principal curvatures, ascending."""
        return radial_curvatures(self)

    @cached_property
    def area_weight(self):
        return radial_area_element(self)


@dataclass(frozen=True, eq=False)
class MinkowskiPointField:
    """Boundary points ``X`` and unit normals ``nu`` in Minkowski space."""

    X: np.ndarray
    nu: np.ndarray


def assemble_A(b):
    return b.A


def is_hconvex(b, margin=HCONVEX_MARGIN):
    return b.min_eig > margin


def shifted_curvatures(b):
    return b.lam


def area_element(b):
    return b.area_weight


def _tangent_vector(grid, comps, frame):
    return sum(c[..., None] * f for c, f in zip(comps, frame))


def embed(b):
    """Boundary points and outward normals recovered from the support function."""
    grid = b.grid
    e = grid.directions()
    frame = grid.frame()
    phi = b.phi
    du = b.grad_u
    du2 = sum(c**2 for c in du)
    grad_vec = _tangent_vector(grid, du, frame)
    half = 0.5 * phi * du2
    x = -phi[..., None] * grad_vec + (half - np.sinh(b.u))[..., None] * e
    x0 = half + np.cosh(b.u)
    X = np.concatenate([x, x0[..., None]], axis=-1)
    null = np.concatenate([e, np.ones(grid.shape + (1,))], axis=-1)
    nu = X - np.exp(-b.u)[..., None] * null
    return MinkowskiPointField(X, nu)


def klein_project(b):
    """Klein model image ``Y = x / x_0`` of the boundary points."""
    X = embed(b).X
    return X[..., :-1] / X[..., -1:]


def interpolate(b0, b1, t):
    """Body with ``phi_t = (1 - t) phi_0 + t phi_1``."""
    if b0.grid != b1.grid:
        raise GridMismatch("interpolation needs bodies on the same grid")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return SupportBody(b0.grid, np.log((1.0 - t) * b0.phi + t * b1.phi))


def sphere_support(grid, r, distance=0.0, axis=None):
    """Support function of the geodesic ball of radius ``r`` centred at distance ``distance`` along ``axis``.

    ``u(e) = r + log(cosh(d) - sinh(d) <axis, e>)``.
    """
    e = grid.directions()
    if axis is None:
        axis = np.zeros(grid.n + 1)
        axis[-1] = 1.0
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    if grid.axisymmetric_mode and not np.allclose(np.abs(axis[-1]), 1.0):
        raise ValueError("zonal grids only support translations along the symmetry axis")
    d = float(distance)
    return SupportBody(grid, r + np.log(np.cosh(d) - np.sinh(d) * (e @ axis)))


def _harmonic_sum(grid, rng, max_degree):
    total = np.zeros(grid.shape)
    for l in range(1, max_degree + 1):
        orders = [0] if grid.axisymmetric_mode else range(-l, l + 1)
        for m in orders:
            total += rng.uniform(-1.0, 1.0) * harmonic(grid, l, m)
    return total


def random_body(grid, seed, r0=1.0, amplitude=0.1, max_degree=4):
    """Seeded random strictly h-convex body near the sphere of radius ``r0``.

    ``u = r0 + a * sum c_lm Y_lm`` with coefficients uniform in ``[-1, 1]``;
    ``a`` is halved until the smallest eigenvalue of ``A`` is at least
    ``0.05 sinh(r0)``.
    """
    if not r0 > 0 or amplitude < 0 or not 0 <= max_degree <= 4:
        raise ValueError("need r0 > 0, amplitude >= 0 and max_degree <= 4")
    shape = _harmonic_sum(grid, np.random.default_rng(seed), max_degree)
    target = 0.05 * np.sinh(r0)
    a = float(amplitude)
    for _ in range(31):
        body = SupportBody(grid, r0 + a * shape)
        if body.min_eig >= target:
            return body
        a *= 0.5
    raise FailedAfter30Halvings(f"seed {seed}: no admissible amplitude found")


def random_radial_body(grid, seed, r0=1.0, amplitude=0.1, max_degree=4):
    """Seeded random star-shaped body with positive sectional curvature.

    ``rho = r0 + a * sum c_lm Y_lm``; ``a`` is halved until
    ``min(kappa_1 kappa_2) - 1`` is at least ``0.05 / sinh(r0)^2``.
    """
    if not r0 > 0 or amplitude < 0 or not 0 <= max_degree <= 4:
        raise ValueError("need r0 > 0, amplitude >= 0 and max_degree <= 4")
    shape = _harmonic_sum(grid, np.random.default_rng(seed), max_degree)
    target = 0.05 / np.sinh(r0) ** 2
    a = float(amplitude)
    for _ in range(31):
        try:
            body = RadialBody(grid, r0 + a * shape)
            k = body.kappa
            if np.min(k[..., 0] * k[..., 1]) - 1.0 >= target:
                return body
        except NonStarShaped:
            pass
        a *= 0.5
    raise FailedAfter30Halvings(f"seed {seed}: no admissible amplitude found")


# ---------------------------------------------------------------- radial graphs


def _radial_tensors(r):
    grad, hess = r._derivatives
    s = np.sinh(r.rho)
    c = np.cosh(r.rho)
    v = r.v
    return grad, hess, s, c, v


def radial_curvatures(r):
    """Principal curvatures of a radial graph from its Weingarten matrix, ascending.

    In the orthonormal frame, ``g = sinh^2 I + d rho d rho^T`` and
    ``h = (-Hess rho + sinh cosh I + 2 coth d rho d rho^T) / v``.
    """
    grad, hess, s, c, v = _radial_tensors(r)
    coth = c / s
    if r.grid.axisymmetric_mode:
        p = grad[0]
        k_rad = (-hess.xx + s * c + 2.0 * coth * p**2) / (v * (s**2 + p**2))
        k_tan = (-hess.yy + s * c) / (v * s**2)
        cols = [k_rad] + [k_tan] * (r.grid.n - 1)
        return np.sort(np.stack(cols, axis=-1), axis=-1)
    p1, p2 = grad
    g11, g12, g22 = s**2 + p1**2, p1 * p2, s**2 + p2**2
    h11 = (-hess.xx + s * c + 2.0 * coth * p1**2) / v
    h12 = (-hess.xy + 2.0 * coth * p1 * p2) / v
    h22 = (-hess.yy + s * c + 2.0 * coth * p2**2) / v
    # reduce to a symmetric problem with the Cholesky factor of g
    l11 = np.sqrt(g11)
    l21 = g12 / l11
    l22 = np.sqrt(g22 - l21**2)
    m11 = h11 / g11
    m12 = (h12 - l21 * h11 / l11) / (l11 * l22)
    m22 = (h22 - 2.0 * l21 * h12 / l11 + l21**2 * h11 / g11) / l22**2
    mid = 0.5 * (m11 + m22)
    rad = np.hypot(0.5 * (m11 - m22), m12)
    return np.stack([mid - rad, mid + rad], axis=-1)


def radial_area_element(r):
    """Area weight ``sinh(rho)^n v`` relative to the round measure."""
    return np.sinh(r.rho) ** r.grid.n * r.v


# ------------------------------------------------------------------ conversions


def _polar_angle(x):
    return np.arccos(np.clip(x[..., -1] / np.linalg.norm(x, axis=-1), -1.0, 1.0))


def _sup_axisymmetric(grid, spline, oversample):
    d0, d1, d2 = spline
    m = oversample * grid.n_theta
    alpha = (np.arange(m) + 0.5) * np.pi / m
    rho_s = d0(alpha)
    th = grid.theta[:, None]
    vals = np.cosh(rho_s) - np.sinh(rho_s) * np.cos(alpha[None, :] + th)
    a = alpha[np.argmax(vals, axis=1)]
    t = grid.theta
    for _ in range(8):
        r, r1, r2 = d0(a), d1(a), d2(a)
        S, C = np.sinh(r), np.cosh(r)
        cs, sn = np.cos(a + t), np.sin(a + t)
        g1 = r1 * (S - C * cs) + S * sn
        g2 = r2 * (S - C * cs) + r1**2 * (C - S * cs) + 2.0 * r1 * C * sn + S * cs
        step = np.where(g2 < 0, -g1 / np.where(g2 < 0, g2, -1.0), 0.0)
        step = np.clip(step, -np.pi / m, np.pi / m)
        a = np.clip(a + step, 0.0, np.pi)
    r = d0(a)
    return np.log(np.cosh(r) - np.sinh(r) * np.cos(a + t))


def _objective_value(interp, w, e):
    """``cosh rho - sinh rho (w . e)`` at unit vectors ``w`` (last axis 3)."""
    theta = np.arccos(np.clip(w[..., 2], -1.0, 1.0))
    phi = np.arctan2(w[..., 1], w[..., 0])
    r = interp(theta, phi)
    return np.cosh(r) - np.sinh(r) * np.sum(w * e, axis=-1)


def _tangent_basis(c):
    # any unit vector far from c, then Gram-Schmidt
    pick = np.where(np.abs(c[..., 2:3]) < 0.9, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    t1 = pick - np.sum(pick * c, axis=-1, keepdims=True) * c
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    return t1, np.cross(c, t1)


def _sup_full(grid, rho, interp, oversample):
    e = grid.directions().reshape(-1, 3)
    nodes = grid.directions().reshape(-1, 3)
    r_nodes = rho.reshape(-1)
    best = np.empty(e.shape[0], dtype=int)
    ch, sh = np.cosh(r_nodes), np.sinh(r_nodes)
    for start in range(0, e.shape[0], 512):
        blk = e[start : start + 512]
        vals = ch[None, :] - sh[None, :] * (blk @ nodes.T)
        best[start : start + 512] = np.argmax(vals, axis=1)
    c = nodes[best]
    # windowed search on an oversampled tangent-plane patch around the coarse maximiser
    t1, t2 = _tangent_basis(c)
    offs = np.arange(-oversample, oversample + 1) * (grid.h / oversample)
    ox, oy = (a.ravel() for a in np.meshgrid(offs, offs, indexing="ij"))
    w = c[:, None, :] + ox[None, :, None] * t1[:, None, :] + oy[None, :, None] * t2[:, None, :]
    w /= np.linalg.norm(w, axis=-1, keepdims=True)
    vals = _objective_value(interp, w, e[:, None, :])
    j = np.argmax(vals, axis=1)
    idx = np.arange(e.shape[0])
    c, val = w[idx, j], vals[idx, j]
    # Newton refinement in a chart centred at the current point; the chart is
    # regular at the poles, unlike (theta, phi)
    d = 1e-4
    lim = grid.h / oversample
    stencil = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]) * d
    for _ in range(8):
        t1, t2 = _tangent_basis(c)
        w = c[:, None, :] + stencil[None, :, 0:1] * t1[:, None, :] + stencil[None, :, 1:2] * t2[:, None, :]
        w /= np.linalg.norm(w, axis=-1, keepdims=True)
        f = _objective_value(interp, w, e[:, None, :])
        gx = (f[:, 1] - f[:, 2]) / (2 * d)
        gy = (f[:, 3] - f[:, 4]) / (2 * d)
        hxx = (f[:, 1] - 2 * f[:, 0] + f[:, 2]) / d**2
        hyy = (f[:, 3] - 2 * f[:, 0] + f[:, 4]) / d**2
        hxy = (f[:, 5] + f[:, 6] - f[:, 7] - f[:, 8]) / (4 * d**2)
        det = hxx * hyy - hxy**2
        ok = (hxx < 0) & (det > 0)
        safe = np.where(ok, det, 1.0)
        sx = np.where(ok, -(hyy * gx - hxy * gy) / safe, 0.0)
        sy = np.where(ok, -(hxx * gy - hxy * gx) / safe, 0.0)
        step = np.hypot(sx, sy)
        shrink = np.where(step > lim, lim / np.maximum(step, 1e-300), 1.0)
        cand = c + (shrink * sx)[:, None] * t1 + (shrink * sy)[:, None] * t2
        cand /= np.linalg.norm(cand, axis=-1, keepdims=True)
        v1 = _objective_value(interp, cand, e)
        better = v1 >= val
        c = np.where(better[:, None], cand, c)
        val = np.where(better, v1, val)
    return np.log(val).reshape(grid.shape)


def support_from_radial(r, oversample=4):
    """Support function of a radial body: ``u(e) = max log(-<xi, (e, 1)>)`` over the boundary.

    The maximum is bracketed on a grid oversampled by ``oversample`` and then
    refined by Newton iteration on the quintic-spline boundary.
    """
    grid = r.grid
    interp = FieldInterpolator(grid, r.rho)
    if grid.axisymmetric_mode:
        spline = (interp, lambda a: interp(a, dtheta=1), lambda a: interp(a, dtheta=2))
        u = _sup_axisymmetric(grid, spline, oversample)
    else:
        u = _sup_full(grid, r.rho, interp, oversample)
    body = SupportBody(grid, u)
    body.require_hconvex(error=ValidationFailed)
    return body


def _wrap(theta, phi):
    neg = theta < 0
    theta = np.where(neg, -theta, theta)
    phi = np.where(neg, phi + np.pi, phi)
    big = theta > np.pi
    theta = np.where(big, 2.0 * np.pi - theta, theta)
    phi = np.where(big, phi + np.pi, phi)
    return theta, np.mod(phi, 2.0 * np.pi)


def radial_from_support(b):
    """Geodesic radius of the boundary resampled onto the grid directions.

    Boundary points are computed at the nodes through :func:`embed`; the
    node-to-direction map is inverted by spline interpolation (zonal) or by
    Newton iteration on quintic-spline interpolants of the embedding.
    """
    grid = b.grid
    X = embed(b).X
    x, x0 = X[..., :-1], X[..., -1]
    rho_nodes = np.arccosh(np.maximum(x0, 1.0))
    if grid.axisymmetric_mode:
        alpha = _polar_angle(x)
        order = np.argsort(alpha)
        a, rv = alpha[order], rho_nodes[order]
        if np.any(np.diff(a) <= 0):
            raise NonStarShaped("boundary is not a radial graph over the sphere")
        p = 6
        a_ext = np.concatenate([-a[p - 1 :: -1], a, 2.0 * np.pi - a[: -p - 1 : -1]])
        r_ext = np.concatenate([rv[p - 1 :: -1], rv, rv[: -p - 1 : -1]])
        rho = make_interp_spline(a_ext, r_ext, k=5)(grid.theta)
        return RadialBody(grid, rho)
    fields = [FieldInterpolator(grid, x[..., i]) for i in range(3)]
    f0 = FieldInterpolator(grid, x0)
    targets = grid.directions().reshape(-1, 3)
    d_nodes = (x / np.linalg.norm(x, axis=-1, keepdims=True)).reshape(-1, 3)
    _, nearest = cKDTree(d_nodes).query(targets)
    th_n, ph_n = (c.reshape(-1) for c in grid.mesh())
    theta, phi = th_n[nearest].copy(), ph_n[nearest].copy()
    # orthonormal tangent basis at each target direction
    t1, t2 = (f.reshape(-1, 3) for f in grid.frame())
    for _ in range(12):
        xv = np.stack([f(theta, phi) for f in fields], axis=-1)
        xt = np.stack([f(theta, phi, dtheta=1) for f in fields], axis=-1)
        xp = np.stack([f(theta, phi, dphi=1) for f in fields], axis=-1)
        nx = np.linalg.norm(xv, axis=-1, keepdims=True)
        d = xv / nx
        dt = (xt - d * np.sum(d * xt, axis=-1, keepdims=True)) / nx
        dp = (xp - d * np.sum(d * xp, axis=-1, keepdims=True)) / nx
        f1, f2 = np.sum(d * t1, axis=-1), np.sum(d * t2, axis=-1)
        j11, j12 = np.sum(dt * t1, axis=-1), np.sum(dp * t1, axis=-1)
        j21, j22 = np.sum(dt * t2, axis=-1), np.sum(dp * t2, axis=-1)
        det = j11 * j22 - j12 * j21
        st_ = -(j22 * f1 - j12 * f2) / det
        sp_ = -(j11 * f2 - j21 * f1) / det
        theta, phi = _wrap(theta + st_, phi + sp_)
        if max(np.abs(f1).max(), np.abs(f2).max()) < 1e-14:
            break
    rho = np.arccosh(np.maximum(f0(theta, phi), 1.0)).reshape(grid.shape)
    return RadialBody(grid, rho)
