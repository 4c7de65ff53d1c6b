"""Conformal dictionary and isometry action on support functions.

A support function ``u`` defines the conformal metric ``exp(-2u) g`` on the
sphere.  Its Schouten tensor

    S = 1/2 g + Hess(u) + du du - 1/2 |du|^2 g

has eigenvalues ``1/2 + 1/lambda_i`` relative to ``exp(-2u) g``.  Isometries
of hyperbolic space are Lorentz matrices acting on Minkowski space (time
coordinate last); their action on support functions is
``u_L(e_L) = u(e) - log(mu)`` with ``L(e, 1) = mu (e_L, 1)``, read off from
the image of the supporting horosphere ``<X, (e, 1)> = -exp(u)``.
"""

import numpy as np

from .errors import ValidationFailed
from .hconvex import SupportBody
from .sphere import FieldInterpolator, SymTensorField

__all__ = [
    "minkowski_metric",
    "is_lorentz",
    "boost",
    "rotation",
    "rotation_about",
    "schouten_tensor",
    "schouten_eigen",
    "mobius_act",
]


def minkowski_metric(dim):
    """``eta = diag(1, ..., 1, -1)`` of size ``dim``."""
    eta = np.eye(dim)
    eta[-1, -1] = -1.0
    return eta


def is_lorentz(L, tol=1e-12):
    """True when ``L`` preserves the Minkowski form and the future sheet."""
    L = np.asarray(L, dtype=float)
    eta = minkowski_metric(L.shape[0])
    return bool(np.abs(L.T @ eta @ L - eta).max() <= tol and L[-1, -1] > 0)


def boost(axis, rapidity):
    """Lorentz boost of rapidity ``rapidity`` along the unit spatial vector ``axis``."""
    a = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(a) - 1.0) > 1e-12:
        raise ValueError("boost axis must be a unit vector")
    m = a.size
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    L = np.eye(m + 1)
    L[:m, :m] += (ch - 1.0) * np.outer(a, a)
    L[:m, m] = sh * a
    L[m, :m] = sh * a
    L[m, m] = ch
    return L


def rotation(R):
    """Lorentz matrix of the spatial rotation ``R``."""
    R = np.asarray(R, dtype=float)
    if np.abs(R.T @ R - np.eye(R.shape[0])).max() > 1e-12:
        raise ValueError("rotation matrix must be orthogonal")
    L = np.eye(R.shape[0] + 1)
    L[:-1, :-1] = R
    return L


def rotation_about(axis, angle):
    """Lorentz matrix of the rotation of ``R^3`` by ``angle`` about ``axis`` (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    R = np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)
    return rotation(R)


def schouten_tensor(b):
    """Frame components of the Schouten tensor of ``exp(-2u) g``.

    Derivatives of ``u`` are taken from the stencils of ``phi = exp(u)``
    (``du = dphi / phi``, ``Hess u = Hess phi / phi - dphi dphi / phi^2``), the
    same discrete operators that define ``A``.
    """
    phi = b.phi
    du = tuple(c / phi for c in b.grad_phi)
    du2 = sum(c**2 for c in du)
    # Hess u + du du = Hess phi / phi
    hess_u = b.hess_phi * (1.0 / phi)
    if b.grid.axisymmetric_mode:
        hess_u = SymTensorField(b.grid, hess_u.xx - du[0] ** 2, hess_u.yy)
        ddu = SymTensorField(b.grid, du[0] ** 2, np.zeros(b.grid.shape))
    else:
        hess_u = SymTensorField(
            b.grid, hess_u.xx - du[0] ** 2, hess_u.yy - du[1] ** 2, hess_u.xy - du[0] * du[1]
        )
        ddu = SymTensorField(b.grid, du[0] ** 2, du[1] ** 2, du[0] * du[1])
    return (hess_u + ddu).plus_identity(0.5 - 0.5 * du2)


def schouten_eigen(b):
    """Eigenvalues of the Schouten tensor relative to ``exp(-2u) g``, ascending."""
    b.require_hconvex()
    return np.exp(2.0 * b.u)[..., None] * schouten_tensor(b).eigvals()


def _check_axis_preserving(L, n):
    m = n + 1
    idx = np.arange(m - 1)
    # any orthogonal map of the transverse coordinates fixes a zonal body
    fixed = L[np.ix_(idx, idx)]
    coupled = np.concatenate([L[idx, m - 1 :].ravel(), L[m - 1 :, idx].ravel()])
    if np.abs(fixed.T @ fixed - np.eye(m - 1)).max() > 1e-12 or np.abs(coupled).max() > 1e-12:
        raise ValueError("zonal grids only support isometries preserving the symmetry axis")


def mobius_act(b, L):
    """Support function of the image body ``L(Omega)``.

    Each grid direction ``e*`` is pulled back exactly, ``L^{-1}(e*, 1) = y``,
    and ``u_L(e*) = u(y / y_t) + log(y_t)`` with ``u`` read from a quintic
    spline interpolant.
    """
    L = np.asarray(L, dtype=float)
    grid = b.grid
    if L.shape != (grid.n + 2, grid.n + 2) or not is_lorentz(L, 1e-10):
        raise ValueError("L must be an orthochronous Lorentz matrix of matching size")
    if grid.axisymmetric_mode:
        _check_axis_preserving(L, grid.n)
    eta = minkowski_metric(grid.n + 2)
    L_inv = eta @ L.T @ eta
    e_star = grid.directions()
    null = np.concatenate([e_star, np.ones(grid.shape + (1,))], axis=-1)
    y = null @ L_inv.T
    yt = y[..., -1]
    e = y[..., :-1] / yt[..., None]
    theta = np.arccos(np.clip(e[..., -1], -1.0, 1.0))
    interp = FieldInterpolator(grid, b.u)
    if grid.axisymmetric_mode:
        u_pull = interp(theta)
    else:
        u_pull = interp(theta, np.arctan2(e[..., 1], e[..., 0]))
    out = SupportBody(grid, u_pull + np.log(yt))
    out.require_hconvex(error=ValidationFailed)
    return out
