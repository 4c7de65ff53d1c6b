"""Discrete calculus on the round sphere.

Two grid layouts are supported.  ``AXISYMMETRIC`` stores a zonal field on
``S^n`` as a function of the colatitude only; ``FULL_S2`` stores a field on
``S^2`` on a latitude-longitude grid.  Colatitudes are cell centered, so no
node sits on a pole.  Ghost values across a pole follow the antipodal rule
``s(-theta, phi) = s(theta, phi + pi)`` (even reflection in the zonal case).

Tensor fields are stored by their components in the orthonormal frame
``(d_theta, d_phi / sin(theta))`` of the round metric, so the round metric is
the identity matrix at every node.
"""

from dataclasses import dataclass
from enum import Enum
from math import gamma, pi

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline
from scipy.special import eval_gegenbauer, eval_legendre, gammaln, lpmv

from .errors import GridMismatch

__all__ = [
    "GridMode",
    "SphereGrid",
    "SymTensorField",
    "FieldInterpolator",
    "sphere_area",
    "covariant_hessian",
    "gradient",
    "gradient_norm2",
    "laplacian",
    "integrate",
    "harmonic",
]


def sphere_area(n):
    """Area ``omega_n`` of the unit ``n``-sphere."""
    return 2.0 * pi ** ((n + 1) / 2.0) / gamma((n + 1) / 2.0)


class GridMode(Enum):
    AXISYMMETRIC = "AXISYMMETRIC"
    FULL_S2 = "FULL_S2"


def _sine_moments(n_theta, power):
    # m_k = int_0^pi cos(k t) sin(t)^power dt for k < n_theta
    x, w = np.polynomial.legendre.leggauss(2 * n_theta + 64)
    t = 0.5 * pi * (x + 1.0)
    w = 0.5 * pi * w
    k = np.arange(n_theta)
    return np.cos(np.outer(k, t)) @ (w * np.sin(t) ** power)


def _colatitude_weights(n_theta, power):
    """Spectral weights for ``int_0^pi g(t) sin(t)^power dt`` on cell centers.

    Exact for cosine polynomials of degree below ``n_theta`` times the sine
    power, hence spectrally accurate for smooth zonal integrands.
    """
    theta = (np.arange(n_theta) + 0.5) * pi / n_theta
    m = _sine_moments(n_theta, power)
    k = np.arange(1, n_theta)
    basis = np.cos(np.outer(theta, k))
    return (m[0] + 2.0 * basis @ m[1:]) / n_theta


class SphereGrid:
    """Immutable sphere discretization with quadrature weights.

    Use :meth:`axisymmetric` or :meth:`full_s2` to construct.
    """

    def __init__(self, mode, n, n_theta, n_phi=1):
        mode = GridMode(mode)
        if n_theta < 4:
            raise ValueError("n_theta must be at least 4")
        if mode is GridMode.FULL_S2:
            if n != 2:
                raise ValueError("FULL_S2 grids live on S^2")
            if n_phi < 4 or n_phi % 2:
                raise ValueError("n_phi must be an even number >= 4")
        else:
            if n < 2:
                raise ValueError("sphere dimension n must be >= 2")
            n_phi = 1
        self.mode = mode
        self.n = int(n)
        self.n_theta = int(n_theta)
        self.n_phi = int(n_phi)
        self.h_theta = pi / self.n_theta
        self.theta = (np.arange(self.n_theta) + 0.5) * self.h_theta
        q = _colatitude_weights(self.n_theta, self.n - 1)
        if mode is GridMode.AXISYMMETRIC:
            self.h_phi = None
            self.phi = None
            self.weights = sphere_area(self.n - 1) * q
            self.sin = np.sin(self.theta)
            self.cos = np.cos(self.theta)
        else:
            self.h_phi = 2.0 * pi / self.n_phi
            self.phi = np.arange(self.n_phi) * self.h_phi
            self.weights = np.outer(q, np.full(self.n_phi, self.h_phi))
            self.sin = np.sin(self.theta)[:, None] * np.ones(self.n_phi)
            self.cos = np.cos(self.theta)[:, None] * np.ones(self.n_phi)
        self.weights.setflags(write=False)
        self.theta.setflags(write=False)

    @classmethod
    def axisymmetric(cls, n=2, n_theta=256):
        return cls(GridMode.AXISYMMETRIC, n, n_theta)

    @classmethod
    def full_s2(cls, n_theta=64, n_phi=128):
        return cls(GridMode.FULL_S2, 2, n_theta, n_phi)

    @property
    def key(self):
        return (self.mode, self.n, self.n_theta, self.n_phi)

    def __eq__(self, other):
        return isinstance(other, SphereGrid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        if self.mode is GridMode.AXISYMMETRIC:
            return f"SphereGrid(AXISYMMETRIC, n={self.n}, n_theta={self.n_theta})"
        return f"SphereGrid(FULL_S2, n_theta={self.n_theta}, n_phi={self.n_phi})"

    @property
    def axisymmetric_mode(self):
        return self.mode is GridMode.AXISYMMETRIC

    @property
    def shape(self):
        if self.axisymmetric_mode:
            return (self.n_theta,)
        return (self.n_theta, self.n_phi)

    @property
    def size(self):
        return self.n_theta * self.n_phi

    @property
    def h(self):
        """Nominal grid spacing (largest coordinate step)."""
        if self.axisymmetric_mode:
            return self.h_theta
        return max(self.h_theta, self.h_phi)

    @property
    def h_min(self):
        """Smallest physical node spacing, which sets the explicit step bound."""
        if self.axisymmetric_mode:
            return self.h_theta
        return min(self.h_theta, np.sin(self.theta[0]) * self.h_phi)

    @property
    def ambient_dim(self):
        """Dimension ``n + 1`` of the Euclidean space containing the sphere."""
        return self.n + 1

    def refine(self, factor=2):
        if self.axisymmetric_mode:
            return SphereGrid(self.mode, self.n, self.n_theta * factor)
        return SphereGrid(self.mode, 2, self.n_theta * factor, self.n_phi * factor)

    def check(self, s):
        s = np.asarray(s, dtype=float)
        if s.shape != self.shape:
            raise GridMismatch(f"field shape {s.shape} does not match grid {self.shape}")
        return s

    def mesh(self):
        """Coordinate arrays ``(theta, phi)`` broadcast to the grid shape."""
        if self.axisymmetric_mode:
            return self.theta.copy(), np.zeros(self.shape)
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def directions(self):
        """Unit vectors ``e`` at the nodes, shape ``grid.shape + (n + 1,)``.

        Zonal grids place nodes on the meridian through the first axis; the
        symmetry axis is the last Euclidean coordinate.
        """
        theta, phi = self.mesh()
        return direction_vectors(self, theta, phi)

    def frame(self):
        """Unit tangent vectors ``(e_theta, e_phi)`` at the nodes."""
        theta, phi = self.mesh()
        return frame_vectors(self, theta, phi)


def direction_vectors(grid, theta, phi=None):
    theta = np.asarray(theta, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    if grid.axisymmetric_mode:
        out = np.zeros(theta.shape + (grid.n + 1,))
        out[..., 0] = st
        out[..., -1] = ct
        return out
    phi = np.asarray(phi, dtype=float)
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)


def frame_vectors(grid, theta, phi=None):
    theta = np.asarray(theta, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    if grid.axisymmetric_mode:
        e_t = np.zeros(theta.shape + (grid.n + 1,))
        e_t[..., 0] = ct
        e_t[..., -1] = -st
        return (e_t,)
    phi = np.asarray(phi, dtype=float)
    cp, sp = np.cos(phi), np.sin(phi)
    e_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_p = np.stack([-sp, cp, np.zeros_like(phi)], axis=-1)
    return e_t, e_p


def _ghost_rows(grid, s, pad):
    """Extend a field across the poles (and periodically in phi) by ``pad`` cells."""
    if grid.axisymmetric_mode:
        return np.concatenate([s[pad - 1 :: -1], s, s[: -pad - 1 : -1]])
    half = grid.n_phi // 2
    top = np.roll(s[pad - 1 :: -1], half, axis=1)
    bottom = np.roll(s[: -pad - 1 : -1], half, axis=1)
    ext = np.concatenate([top, s, bottom], axis=0)
    return np.concatenate([ext[:, -pad:], ext, ext[:, :pad]], axis=1)


def _derivatives(grid, s):
    """Central differences in coordinates.

    Zonal grids use second-order stencils.  Latitude-longitude grids use
    fourth-order stencils: near the poles the frame components divide by
    ``sin(theta) ~ h``, which would cost one order with second-order stencils.
    """
    h = grid.h_theta
    if grid.axisymmetric_mode:
        p = _ghost_rows(grid, s, 1)
        s_t = (p[2:] - p[:-2]) / (2 * h)
        s_tt = (p[2:] - 2 * s + p[:-2]) / h**2
        return s_t, s_tt
    k = grid.h_phi
    p = _ghost_rows(grid, s, 2)

    def d1(a, axis):
        sl = [slice(None)] * 2
        def at(i):
            sl[axis] = slice(2 + i, a.shape[axis] - 2 + i or None)
            return a[tuple(sl)]
        return (8 * (at(1) - at(-1)) - (at(2) - at(-2))) / 12.0

    def d2(a, axis):
        sl = [slice(None)] * 2
        def at(i):
            sl[axis] = slice(2 + i, a.shape[axis] - 2 + i or None)
            return a[tuple(sl)]
        return (16 * (at(1) + at(-1)) - (at(2) + at(-2)) - 30 * at(0)) / 12.0

    rows = p[:, 2:-2]
    cols = p[2:-2, :]
    s_t = d1(rows, 0) / h
    s_tt = d2(rows, 0) / h**2
    s_p = d1(cols, 1) / k
    s_pp = d2(cols, 1) / k**2
    s_tp = d1(d1(p, 0), 1) / (h * k)
    return s_t, s_p, s_tt, s_tp, s_pp


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """Symmetric 2-tensor field in the orthonormal frame of the round metric.

    For ``FULL_S2`` the components are ``xx, xy, yy``.  For ``AXISYMMETRIC``
    ``xx`` is the radial (meridian) eigen-component and ``yy`` the tangential
    one, repeated ``n - 1`` times; ``xy`` is ``None``.
    """

    grid: SphereGrid
    xx: np.ndarray
    yy: np.ndarray
    xy: np.ndarray = None

    @classmethod
    def identity(cls, grid, scale=1.0):
        c = np.broadcast_to(np.asarray(scale, dtype=float), grid.shape).copy()
        xy = None if grid.axisymmetric_mode else np.zeros(grid.shape)
        return cls(grid, c, c.copy(), xy)

    def _xy(self):
        return np.zeros(self.grid.shape) if self.xy is None else self.xy

    def __add__(self, other):
        if isinstance(other, SymTensorField):
            xy = None if self.xy is None else self.xy + other._xy()
            return SymTensorField(self.grid, self.xx + other.xx, self.yy + other.yy, xy)
        return NotImplemented

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        c = np.asarray(c, dtype=float)
        xy = None if self.xy is None else c * self.xy
        return SymTensorField(self.grid, c * self.xx, c * self.yy, xy)

    __rmul__ = __mul__

    def plus_identity(self, c):
        """Return ``self + c * I`` for a scalar or scalar field ``c``."""
        return SymTensorField(self.grid, self.xx + c, self.yy + c, self.xy)

    def trace(self):
        if self.grid.axisymmetric_mode:
            return self.xx + (self.grid.n - 1) * self.yy
        return self.xx + self.yy

    def det(self):
        if self.grid.axisymmetric_mode:
            return self.xx * self.yy ** (self.grid.n - 1)
        return self.xx * self.yy - self.xy**2

    def eigvals(self):
        """Eigenvalues relative to the round metric, ascending, shape ``(..., n)``."""
        if self.grid.axisymmetric_mode:
            cols = [self.xx] + [self.yy] * (self.grid.n - 1)
            return np.sort(np.stack(cols, axis=-1), axis=-1)
        m = 0.5 * (self.xx + self.yy)
        d = np.hypot(0.5 * (self.xx - self.yy), self.xy)
        return np.stack([m - d, m + d], axis=-1)

    def min_eig(self):
        return self.eigvals()[..., 0]

    def coordinate(self):
        """Components in the coordinate basis: ``(H_tt, H_tp, H_pp)`` or ``(radial, tangential)``."""
        if self.grid.axisymmetric_mode:
            return self.xx, self.yy
        s = self.grid.sin
        return self.xx, self.xy * s, self.yy * s**2

    def quadratic(self, a, b=None):
        """Evaluate ``v^T H w`` for frame vectors given as tuples of components."""
        b = a if b is None else b
        if self.grid.axisymmetric_mode:
            return self.xx * a[0] * b[0]
        return self.xx * a[0] * b[0] + self.xy * (a[0] * b[1] + a[1] * b[0]) + self.yy * a[1] * b[1]


def gradient(grid, s):
    """Frame components of the gradient: ``(s_t,)`` or ``(s_t, s_p / sin)``."""
    s = grid.check(s)
    d = _derivatives(grid, s)
    if grid.axisymmetric_mode:
        return (d[0],)
    return d[0], d[1] / grid.sin


def gradient_norm2(grid, s):
    return sum(c**2 for c in gradient(grid, s))


def covariant_hessian(grid, s):
    """Covariant Hessian of ``s`` with respect to the round metric."""
    s = grid.check(s)
    d = _derivatives(grid, s)
    if grid.axisymmetric_mode:
        s_t, s_tt = d
        return SymTensorField(grid, s_tt, grid.cos / grid.sin * s_t)
    s_t, s_p, s_tt, s_tp, s_pp = d
    sn, cs = grid.sin, grid.cos
    h_tp = (s_tp - cs / sn * s_p) / sn
    h_pp = (s_pp + sn * cs * s_t) / sn**2
    return SymTensorField(grid, s_tt, h_pp, h_tp)


def gradient_and_hessian(grid, s):
    """Frame gradient and covariant Hessian sharing one stencil pass."""
    s = grid.check(s)
    d = _derivatives(grid, s)
    if grid.axisymmetric_mode:
        s_t, s_tt = d
        return (s_t,), SymTensorField(grid, s_tt, grid.cos / grid.sin * s_t)
    s_t, s_p, s_tt, s_tp, s_pp = d
    sn, cs = grid.sin, grid.cos
    hess = SymTensorField(grid, s_tt, (s_pp + sn * cs * s_t) / sn**2, (s_tp - cs / sn * s_p) / sn)
    return (s_t, s_p / sn), hess


def laplacian(grid, s):
    return covariant_hessian(grid, s).trace()


def integrate(grid, s):
    """Quadrature of a field over the sphere with respect to the round measure."""
    s = grid.check(s)
    return float(np.sum(s * grid.weights))


class FieldInterpolator:
    """Quintic spline interpolant of a grid field, valid everywhere on the sphere.

    The field is extended across the poles with the same ghost rule as the
    difference stencils, so the interpolant is smooth through the poles up
    to the spline order.
    """

    PAD = 6

    def __init__(self, grid, s):
        s = grid.check(s)
        self.grid = grid
        pad = self.PAD
        ext = _ghost_rows(grid, s, pad)
        h = grid.h_theta
        t_ext = (np.arange(-pad, grid.n_theta + pad) + 0.5) * h
        if grid.axisymmetric_mode:
            self._spline = make_interp_spline(t_ext, ext, k=5)
            self._dspline = self._spline.derivative()
            self._ddspline = self._dspline.derivative()
        else:
            p_ext = np.arange(-pad, grid.n_phi + pad) * grid.h_phi
            self._spline = RectBivariateSpline(t_ext, p_ext, ext, kx=5, ky=5, s=0)

    def __call__(self, theta, phi=None, dtheta=0, dphi=0):
        theta = np.asarray(theta, dtype=float)
        if self.grid.axisymmetric_mode:
            if dphi:
                return np.zeros_like(theta)
            spl = (self._spline, self._dspline, self._ddspline)[dtheta]
            return spl(theta)
        phi = np.mod(np.asarray(phi, dtype=float), 2.0 * pi)
        shape = np.broadcast(theta, phi).shape
        t = np.broadcast_to(theta, shape).ravel()
        p = np.broadcast_to(phi, shape).ravel()
        return self._spline.ev(t, p, dx=dtheta, dy=dphi).reshape(shape)


def harmonic(grid, l, m=0):
    """Real spherical harmonic of degree ``l`` sampled on the grid.

    Zonal harmonics are normalized to 1 at the north pole (Legendre on
    ``S^2``, Gegenbauer ``C_l^((n-1)/2)`` in general).  Non-zonal harmonics
    on ``S^2`` use Schmidt semi-normalized associated Legendre functions
    times ``cos(m phi)`` for ``m > 0`` and ``sin(|m| phi)`` for ``m < 0``.
    """
    theta, phi = grid.mesh()
    x = np.cos(theta)
    if m == 0:
        if grid.n == 2:
            return eval_legendre(l, x)
        a = 0.5 * (grid.n - 1)
        return eval_gegenbauer(l, a, x) / eval_gegenbauer(l, a, 1.0)
    if grid.axisymmetric_mode:
        raise ValueError("non-zonal harmonics need a FULL_S2 grid")
    am = abs(m)
    if am > l:
        raise ValueError("|m| must not exceed l")
    norm = np.sqrt(2.0 * np.exp(gammaln(l - am + 1) - gammaln(l + am + 1)))
    leg = (-1) ** am * lpmv(am, l, x) * norm
    return leg * (np.cos(am * phi) if m > 0 else np.sin(am * phi))
