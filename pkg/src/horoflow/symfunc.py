"""Symmetric functions of curvature vectors.

Elementary symmetric polynomials, normalized means, power sums, the speed
catalog used by the flows, duals, and pointwise checks of the structural
inequalities (log-convexity in log-curvature coordinates, concavity and
inverse concavity).

All evaluators accept arrays of shape ``(..., n)`` and act on the last axis,
so a whole grid of curvature vectors is processed in one call.
"""

from dataclasses import dataclass
from enum import Enum
from math import comb

import numpy as np

from .errors import DomainError

__all__ = [
    "SpeedKind",
    "SpeedFunction",
    "SymmetricValues",
    "SpeedValue",
    "AssumptionReport",
    "elementary",
    "sigma",
    "normalized_sigma",
    "power_sum",
    "sigma_E_S",
    "grad_sigma",
    "speed_eval",
    "speed_value",
    "dual_eval",
    "dual_grad",
    "assumption_check",
    "shift_transform",
]

FD_REL_STEP = 1e-5
TIE_TOL = 1e-8


class SpeedKind(Enum):
    POWER_EK = "POWER_EK"
    POWER_SP = "POWER_SP"
    QUOTIENT = "QUOTIENT"
    SQRT_GAUSS_2D = "SQRT_GAUSS_2D"


@dataclass(frozen=True)
class SpeedFunction:
    """A speed from the catalog.

    Parameters
    ----------
    kind : SpeedKind
    k : int
        Order for ``POWER_EK`` and numerator order for ``QUOTIENT``.
    l : int
        Denominator order for ``QUOTIENT``.
    p : float
        Power for ``POWER_SP``.
    alpha : float
        Exponent applied by the volume preserving flow (``F**alpha``).
    shifted : bool
        Whether the argument is the shifted curvature ``lambda = kappa - 1``.
    """

    kind: SpeedKind
    k: int = 1
    l: int = 0
    p: float = 1.0
    alpha: float = 1.0
    shifted: bool = False

    @classmethod
    def power_ek(cls, k, alpha=1.0, shifted=False):
        return cls(SpeedKind.POWER_EK, k=int(k), alpha=float(alpha), shifted=shifted)

    @classmethod
    def power_sp(cls, p, alpha=1.0, shifted=False):
        return cls(SpeedKind.POWER_SP, p=float(p), alpha=float(alpha), shifted=shifted)

    @classmethod
    def quotient(cls, k, l, alpha=1.0, shifted=False):
        return cls(SpeedKind.QUOTIENT, k=int(k), l=int(l), alpha=float(alpha), shifted=shifted)

    @classmethod
    def sqrt_gauss_2d(cls, alpha=1.0, shifted=False):
        return cls(SpeedKind.SQRT_GAUSS_2D, alpha=float(alpha), shifted=shifted)

    @property
    def is_linear(self):
        if self.kind is SpeedKind.POWER_EK:
            return self.k == 1
        if self.kind is SpeedKind.POWER_SP:
            return self.p == 1.0
        if self.kind is SpeedKind.QUOTIENT:
            return self.k == 1 and self.l == 0
        return False

    def validate(self, n):
        """Raise ``ValueError`` if the parameters are inadmissible in dimension ``n``."""
        if n < 2:
            raise ValueError("dimension n must be at least 2")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.kind is SpeedKind.POWER_EK and not 1 <= self.k <= n:
            raise ValueError(f"POWER_EK needs 1 <= k <= n, got k={self.k}")
        if self.kind is SpeedKind.POWER_SP and not self.p > 0:
            raise ValueError("POWER_SP needs p > 0")
        if self.kind is SpeedKind.QUOTIENT and not 0 <= self.l < self.k <= n:
            raise ValueError(f"QUOTIENT needs 0 <= l < k <= n, got ({self.k}, {self.l})")
        if self.kind is SpeedKind.SQRT_GAUSS_2D and n != 2:
            raise ValueError("SQRT_GAUSS_2D is only defined for n = 2")
        return self

    def label(self):
        if self.kind is SpeedKind.POWER_EK:
            return f"POWER_EK({self.k})"
        if self.kind is SpeedKind.POWER_SP:
            return f"POWER_SP({self.p:g})"
        if self.kind is SpeedKind.QUOTIENT:
            return f"QUOTIENT({self.k},{self.l})"
        return "SQRT_GAUSS_2D"


@dataclass(frozen=True)
class SymmetricValues:
    sigma_k: np.ndarray
    E_k: np.ndarray
    S_p: np.ndarray


@dataclass(frozen=True)
class SpeedValue:
    value: np.ndarray
    gradient: np.ndarray


@dataclass(frozen=True)
class AssumptionReport:
    """Pointwise structural margins; each is nonnegative when the property holds.

    ``concave_min_eig`` and ``invconcave_min_eig`` are the smallest eigenvalues
    of the negated second derivative form of ``f`` and of its dual, so a
    nonnegative value certifies concavity.  ``invcon_lemma_min_eig`` is the
    margin of the inverse-concavity consequence
    ``f'' + 2 diag(f'/kappa) - 2 f'f'^T / f >= 0``.
    """

    ineq_ii: float
    ineq_iii_min_eig: float
    concave_min_eig: float
    invconcave_min_eig: float
    invcon_lemma_min_eig: float


def _as_vector(v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] < 2:
        raise ValueError("curvature vectors need at least 2 entries")
    if not np.all(np.isfinite(v)):
        raise ValueError("curvature vector has non-finite entries")
    return v


def elementary(v):
    """All elementary symmetric polynomials ``sigma_0..sigma_n`` along the last axis."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    out = np.zeros(v.shape[:-1] + (n + 1,))
    out[..., 0] = 1.0
    for i in range(n):
        vi = v[..., i, None]
        out[..., 1 : i + 2] = out[..., 1 : i + 2] + vi * out[..., : i + 1].copy()
    return out


def sigma(v, k):
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    return elementary(v)[..., k]


def normalized_sigma(v, k):
    """``E_k = sigma_k / C(n, k)``."""
    n = np.shape(v)[-1]
    return sigma(v, k) / comb(n, k)


def power_sum(v, p):
    v = np.asarray(v, dtype=float)
    if float(p) != int(p) and np.any(v <= 0):
        raise DomainError("fractional power sum needs positive entries")
    return np.sum(v**p, axis=-1)


def sigma_E_S(v, k, p=1.0):
    """Return ``sigma_k``, ``E_k`` and ``S_p`` of ``v``."""
    v = _as_vector(v)
    s = sigma(v, k)
    return SymmetricValues(sigma_k=s, E_k=s / comb(v.shape[-1], k), S_p=power_sum(v, p))


def grad_sigma(v, k):
    """Gradient of ``sigma_k``: entry ``i`` is ``sigma_{k-1}`` of ``v`` without entry ``i``."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    out = np.empty_like(v)
    for i in range(n):
        out[..., i] = elementary(np.delete(v, i, axis=-1))[..., k - 1]
    return out


def _grad_E(v, k):
    n = v.shape[-1]
    if k == 0:
        return np.zeros_like(v)
    return grad_sigma(v, k) / comb(n, k)


def _check_domain(f, v):
    f.validate(v.shape[-1])
    if not f.is_linear and np.any(v <= 0):
        raise DomainError(f"{f.label()} needs strictly positive curvatures")


def speed_eval(f, v):
    """Value and gradient of ``f`` at ``v`` (arrays of shape ``(..., n)``)."""
    v = _as_vector(v)
    _check_domain(f, v)
    n = v.shape[-1]
    if f.kind is SpeedKind.POWER_EK:
        k = f.k
        e = normalized_sigma(v, k)
        if k == 1:
            return SpeedValue(e, _grad_E(v, 1))
        if np.any(e <= 0):
            raise DomainError("E_k must be positive")
        val = e ** (1.0 / k)
        grad = (val / (k * e))[..., None] * _grad_E(v, k)
        return SpeedValue(val, grad)
    if f.kind is SpeedKind.POWER_SP:
        p = f.p
        mean = np.sum(v**p, axis=-1) / n
        val = mean ** (1.0 / p)
        grad = (val / mean)[..., None] * v ** (p - 1.0) / n
        return SpeedValue(val, grad)
    if f.kind is SpeedKind.QUOTIENT:
        k, l = f.k, f.l
        ek = normalized_sigma(v, k)
        el = normalized_sigma(v, l) if l > 0 else np.ones(v.shape[:-1])
        if np.any(el <= 0) or (not f.is_linear and np.any(ek <= 0)):
            raise DomainError("QUOTIENT needs E_k, E_l > 0")
        val = (ek / el) ** (1.0 / (k - l))
        dlog = _grad_E(v, k) / ek[..., None]
        if l > 0:
            dlog = dlog - _grad_E(v, l) / el[..., None]
        grad = (val / (k - l))[..., None] * dlog
        return SpeedValue(val, grad)
    val = np.sqrt(v[..., 0] * v[..., 1])
    grad = np.stack([0.5 * val / v[..., 0], 0.5 * val / v[..., 1]], axis=-1)
    return SpeedValue(val, grad)


def speed_value(f, v):
    """Value of ``f`` at ``v``; same domain rules as :func:`speed_eval`, no gradient."""
    v = _as_vector(v)
    _check_domain(f, v)
    n = v.shape[-1]
    if f.kind is SpeedKind.POWER_EK:
        e = normalized_sigma(v, f.k)
        if f.k == 1:
            return e
        if np.any(e <= 0):
            raise DomainError("E_k must be positive")
        return e ** (1.0 / f.k)
    if f.kind is SpeedKind.POWER_SP:
        return (np.sum(v**f.p, axis=-1) / n) ** (1.0 / f.p)
    if f.kind is SpeedKind.QUOTIENT:
        el_all = elementary(v)
        ek = el_all[..., f.k] / comb(n, f.k)
        el = el_all[..., f.l] / comb(n, f.l)
        if np.any(el <= 0) or (not f.is_linear and np.any(ek <= 0)):
            raise DomainError("QUOTIENT needs E_k, E_l > 0")
        return (ek / el) ** (1.0 / (f.k - f.l))
    return np.sqrt(v[..., 0] * v[..., 1])


def dual_eval(f, v):
    """Dual function ``f_*(z) = 1 / f(1/z)``."""
    v = _as_vector(v)
    if np.any(v == 0):
        raise DomainError("dual needs nonzero entries")
    return 1.0 / speed_value(f, 1.0 / v)


def dual_grad(f, v):
    """Value and gradient of the dual function."""
    v = _as_vector(v)
    if np.any(v == 0):
        raise DomainError("dual needs nonzero entries")
    inner = speed_eval(f, 1.0 / v)
    val = 1.0 / inner.value
    grad = inner.gradient / (inner.value[..., None] ** 2 * v**2)
    return SpeedValue(val, grad)


def _fd_hessian(grad_fn, v):
    n = v.size
    hess = np.empty((n, n))
    for j in range(n):
        h = FD_REL_STEP * max(abs(v[j]), 1e-300)
        vp = v.copy()
        vm = v.copy()
        vp[j] += h
        vm[j] -= h
        hess[:, j] = (grad_fn(vp) - grad_fn(vm)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def _divided_difference(grad_fn, v, grad, i, j):
    if abs(v[i] - v[j]) >= TIE_TOL * max(1.0, abs(v[i])):
        return (grad[i] - grad[j]) / (v[i] - v[j])
    w = v.copy()
    m = 0.5 * (v[i] + v[j])
    d = 1e-6 * max(abs(m), 1e-300)
    w[i], w[j] = m + d, m - d
    gw = grad_fn(w)
    return (gw[i] - gw[j]) / (w[i] - w[j])


def _negated_form_min(grad_fn, v):
    g = grad_fn(v)
    hess = _fd_hessian(grad_fn, v)
    margins = list(np.linalg.eigvalsh(-hess))
    n = v.size
    for i in range(n):
        for j in range(i):
            margins.append(-_divided_difference(grad_fn, v, g, i, j))
    return float(min(margins))


def assumption_check(f, v):
    """Pointwise margins of the structural inequalities at a single vector ``v``.

    Gradients are analytic; Hessians are central differences of the analytic
    gradient with relative step ``1e-5``.
    """
    v = _as_vector(v).copy()
    if v.ndim != 1:
        raise ValueError("assumption_check works on one curvature vector")
    if np.any(v <= 0):
        raise DomainError("structural checks need a point of the positive cone")
    n = v.size

    def grad_f(x):
        return speed_eval(f, x).gradient

    def grad_dual(x):
        return dual_grad(f, x).gradient

    val = float(speed_value(f, v))
    g = grad_f(v)
    hess = _fd_hessian(grad_f, v)

    ii = np.inf
    for i in range(n):
        for j in range(n):
            if i != j:
                ii = min(ii, (g[i] * v[i] - g[j] * v[j]) * (v[i] - v[j]))

    q = hess / val - np.outer(g, g) / val**2 + np.diag(g / (val * v))
    iii = float(np.linalg.eigvalsh(q)[0])

    lemma = hess + np.diag(2.0 * g / v) - 2.0 * np.outer(g, g) / val
    return AssumptionReport(
        ineq_ii=float(ii),
        ineq_iii_min_eig=iii,
        concave_min_eig=_negated_form_min(grad_f, v),
        invconcave_min_eig=_negated_form_min(grad_dual, v),
        invcon_lemma_min_eig=float(np.linalg.eigvalsh(lemma)[0]),
    )


def shift_transform(E_kappa, k):
    """``E_k(kappa - 1)`` from the list ``E_0(kappa)..E_k(kappa)``.

    Uses ``E_k(lambda) = sum_i (-1)^(k-i) C(k, i) E_i(kappa)``.
    """
    E_kappa = np.asarray(E_kappa, dtype=float)
    if k < 0 or E_kappa.shape[0] < k + 1:
        raise ValueError(f"need E_0..E_{k}, got {E_kappa.shape[0]} entries")
    total = np.zeros(E_kappa.shape[1:])
    for i in range(k + 1):
        total = total + (-1) ** (k - i) * comb(k, i) * E_kappa[i]
    return total
