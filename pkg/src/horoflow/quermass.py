"""Curvature integrals, quermassintegrals and Alexandrov-Fenchel gaps.

Curvature integrals are ``V_{n-k} = int E_k(kappa) dmu``.  Quermassintegrals
follow from them by the linear recursion

    W_1 = V_n / n,   W_{k+1} = (V_{n-k} - k W_{k-1}) / (n - k),  k = 1..n-1,

started from the enclosed volume ``W_0`` and closed by ``W_{n+1} = omega_n/(n+1)``.
Modified quermassintegrals are ``Wt_k = sum_i (-1)^(k-i) C(k, i) W_i``.

Reference functions ``f_k(r) = W_k(B(r))`` and ``ft_k(r) = Wt_k(B(r))`` of
geodesic balls are available in closed form (:func:`sphere_reference`) and in
a cancellation-free quadrature form used for inversion (:func:`reference_value`).
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import OutOfBracket
from .hconvex import RadialBody, SupportBody, embed
from .sphere import sphere_area
from .symfunc import elementary

__all__ = [
    "FunctionalVector",
    "FAMILIES",
    "QUADRATURE_TOL",
    "ball_volume_profile",
    "curvature_integrals",
    "shifted_integrals",
    "enclosed_volume",
    "quermass_chain",
    "functionals",
    "sphere_reference",
    "reference_value",
    "invert_reference",
    "admissible_pairs",
    "af_gap",
    "af_scale",
]

FAMILIES = ("AF_W", "AF_Wt", "AF_AREA")
# relative accuracy of the sphere quadrature on smooth integrands
QUADRATURE_TOL = 1e-10
R_BRACKET = (1e-8, 20.0)


@dataclass(frozen=True)
class FunctionalVector:
    """Curvature integrals and quermassintegrals of one body.

    ``V[k]`` holds ``V_{n-k} = int E_k dmu`` for ``k = 0..n`` (so the list
    runs ``V_n, ..., V_0``).  ``residual`` is ``V_0 - n W_{n-1}``, the
    recursion evaluated at ``k = n``; ``gauss_bonnet_defect`` is
    ``residual - omega_n``.
    """

    n: int
    V: tuple
    W: tuple
    Wt: tuple
    residual: float
    gauss_bonnet_defect: float


@lru_cache(maxsize=None)
def _gauss_legendre(m=32):
    return np.polynomial.legendre.leggauss(m)


def ball_volume_profile(r, n):
    """``int_0^r sinh(s)^n ds``, closed form for ``n = 2`` and 32-point Gauss-Legendre otherwise."""
    r = np.asarray(r, dtype=float)
    if n == 2:
        return (np.sinh(2.0 * r) - 2.0 * r) / 4.0
    x, w = _gauss_legendre(32)
    s = 0.5 * r[..., None] * (x + 1.0)
    return 0.5 * r * np.sum(w * np.sinh(s) ** n, axis=-1)


def _field_curvatures(body):
    grid = body.grid
    if isinstance(body, SupportBody):
        return body.kappa, body.area_weight * grid.weights
    if isinstance(body, RadialBody):
        return body.kappa, body.area_weight * grid.weights
    raise TypeError("expected a SupportBody or RadialBody")


def curvature_integrals(body):
    """Array ``V`` with ``V[k] = int E_k(kappa) dmu`` for ``k = 0..n``."""
    kappa, dmu = _field_curvatures(body)
    n = body.grid.n
    el = elementary(kappa)
    return np.array([np.sum(el[..., k] * dmu) / comb(n, k) for k in range(n + 1)])


def shifted_integrals(body):
    """Array with entry ``k`` equal to ``int E_k(kappa - 1) dmu`` evaluated directly."""
    kappa, dmu = _field_curvatures(body)
    n = body.grid.n
    el = elementary(kappa - 1.0)
    return np.array([np.sum(el[..., k] * dmu) / comb(n, k) for k in range(n + 1)])


def enclosed_volume(body):
    """Hyperbolic volume ``W_0`` of the enclosed region.

    Radial bodies use ``int int_0^rho sinh^n ds dsigma``.  Support bodies use
    the divergence theorem with the radial field ``Phi(r) / sinh(r)^n d_r``,
    whose divergence is 1, integrated over the boundary against ``dmu``.
    """
    grid = body.grid
    n = grid.n
    if isinstance(body, RadialBody):
        return float(np.sum(ball_volume_profile(body.rho, n) * grid.weights))
    if isinstance(body, SupportBody):
        pts = embed(body)
        x0 = pts.X[..., -1]
        r = np.arccosh(np.maximum(x0, 1.0))
        sr = np.sinh(r)
        flux = ball_volume_profile(r, n) / sr ** (n + 1) * pts.nu[..., -1]
        return float(np.sum(flux * body.area_weight * grid.weights))
    raise TypeError("expected a SupportBody or RadialBody")


def quermass_chain(V, W0, n):
    """Quermassintegrals from curvature integrals ``V[k] = V_{n-k}`` and the volume ``W0``."""
    V = [float(v) for v in V]
    if len(V) != n + 1:
        raise ValueError(f"need V_n..V_0 ({n + 1} values), got {len(V)}")
    W = [0.0] * (n + 2)
    W[0] = float(W0)
    W[1] = V[0] / n
    for k in range(1, n):
        W[k + 1] = (V[k] - k * W[k - 1]) / (n - k)
    W[n + 1] = sphere_area(n) / (n + 1)
    Wt = [sum((-1) ** (k - i) * comb(k, i) * W[i] for i in range(k + 1)) for k in range(n + 1)]
    residual = V[n] - n * W[n - 1]
    return FunctionalVector(
        n=n,
        V=tuple(V),
        W=tuple(W),
        Wt=tuple(Wt),
        residual=residual,
        gauss_bonnet_defect=residual - sphere_area(n),
    )


def functionals(body):
    return quermass_chain(curvature_integrals(body), enclosed_volume(body), body.grid.n)


def sphere_reference(r, n):
    """Functionals of the geodesic ball of radius ``r`` in closed form."""
    r = float(r)
    s, c = np.sinh(r), np.cosh(r)
    om = sphere_area(n)
    V = [om * s**n * (c / s) ** k for k in range(n + 1)]
    return quermass_chain(V, om * float(ball_volume_profile(r, n)), n)


@lru_cache(maxsize=None)
def _panel_rule(m=20):
    return np.polynomial.legendre.leggauss(m)


def reference_value(r, k, n, modified=False):
    """``f_k(r)`` or, with ``modified``, ``ft_k(r)``.

    Evaluated as ``omega_n int_0^r sinh^(n-k) cosh^k`` and
    ``omega_n int_0^r sinh^(n-k) exp(-k t)`` (the derivatives along a family
    of concentric balls) by panel Gauss-Legendre.  This agrees with
    :func:`sphere_reference` but avoids its cancellation at large ``r``.
    """
    r = float(r)
    if r <= 0:
        return 0.0
    panels = max(1, int(np.ceil(r)))
    x, w = _panel_rule()
    edges = np.linspace(0.0, r, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    t = edges[:-1, None] + half * (x + 1.0)
    if modified:
        g = np.sinh(t) ** (n - k) * np.exp(-k * t)
    else:
        g = np.sinh(t) ** (n - k) * np.cosh(t) ** k
    return float(sphere_area(n) * np.sum(half * w * g))


def invert_reference(value, k, n, modified=False):
    """Radius ``r`` with ``f_k(r) = value`` (or ``ft_k``) by bisection on ``[1e-8, 20]``."""
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    value = float(value)
    lo, hi = R_BRACKET
    f_lo = reference_value(lo, k, n, modified)
    f_hi = reference_value(hi, k, n, modified)
    if not f_lo <= value <= f_hi:
        raise OutOfBracket(f"value {value:.6g} outside [{f_lo:.3g}, {f_hi:.3g}]")
    tol = 1e-15 * value
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        f_mid = reference_value(mid, k, n, modified)
        if abs(f_mid - value) <= tol or hi - lo <= 4e-16 * mid:
            return mid
        if f_mid < value:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def admissible_pairs(n, family):
    """Index pairs ``(k, l)`` tabulated for an inequality family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family == "AF_AREA":
        return [(k, 0) for k in range(1, n + 1)]
    return [(k, l) for k in range(1, n + 1) for l in range(k)]


def _area_bound(area, k, n):
    return area * (1.0 + (area / sphere_area(n)) ** (-2.0 / n)) ** (k / 2.0)


def af_gap(body, k, l=0, family="AF_W", fv=None):
    """Alexandrov-Fenchel gap of ``body``; nonnegative for h-convex bodies.

    ``AF_W``: ``W_k - f_k(f_l^{-1}(W_l))``; ``AF_Wt``: the same with modified
    quermassintegrals; ``AF_AREA``: ``int E_k dmu - |M| (1 + (|M|/omega_n)^(-2/n))^(k/2)``.
    ``fv`` may pass precomputed functionals.
    """
    n = body.grid.n if body is not None else fv.n
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family == "AF_AREA":
        if not 1 <= k <= n:
            raise ValueError("area form needs 1 <= k <= n")
    elif not 0 <= l < k <= n:
        raise ValueError("need 0 <= l < k <= n")
    fv = functionals(body) if fv is None else fv
    if family == "AF_AREA":
        return fv.V[k] - _area_bound(fv.V[0], k, n)
    modified = family == "AF_Wt"
    vals = fv.Wt if modified else fv.W
    r = invert_reference(vals[l], l, n, modified)
    return vals[k] - reference_value(r, k, n, modified)


def af_scale(fv, k, family):
    """Magnitude used to make gap tolerances relative."""
    if family == "AF_AREA":
        return max(1.0, abs(fv.V[k]))
    vals = fv.Wt if family == "AF_Wt" else fv.W
    return max(1.0, abs(vals[k]))
