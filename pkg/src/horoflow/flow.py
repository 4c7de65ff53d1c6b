"""Constrained curvature flows and their diagnostics.

``VMCF`` moves a radial graph with normal speed ``phi(t) - F(kappa)^alpha``,
where ``phi(t)`` is the area-weighted mean of ``F^alpha`` so that the
enclosed volume is preserved:

    d rho / dt = (phi(t) - F^alpha) v,   v = sqrt(1 + |grad rho|^2 / sinh^2 rho).

``VMCF2`` moves an h-convex body with speed ``phi(t) - F(lambda)``, where
``phi(t)`` is the ``E_l(lambda)``-weighted mean of ``F`` so that the modified
quermassintegral ``Wt_l`` is preserved.  In support-function form, with
``phi = exp(u)``,

    d phi / dt = -f(1/a) + phi * phi(t),

where ``a`` are the eigenvalues of the A-matrix.  Both equations are
integrated with classical RK4; the global term is recomputed at every stage.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, DomainViolation, HConvexityLost, NonStarShaped, NotHConvex
from .hconvex import (
    HCONVEX_MARGIN,
    RadialBody,
    SupportBody,
    embed,
    radial_area_element,
    radial_curvatures,
    random_body,
    random_radial_body,
)
from .quermass import functionals
from .sphere import SphereGrid, gradient_and_hessian, harmonic
from .symfunc import SpeedFunction, SpeedKind, normalized_sigma, speed_eval, speed_value

__all__ = [
    "FlowKind",
    "InitialSpec",
    "FlowConfig",
    "FlowRecord",
    "FlowResult",
    "initial_body",
    "global_term_vmcf",
    "global_term_vmcf2",
    "cfl_dt",
    "step_vmcf",
    "step_vmcf2",
    "diagnostics",
    "fit_decay",
    "run",
]


class FlowKind(Enum):
    VMCF = "VMCF"
    VMCF2 = "VMCF2"


@dataclass(frozen=True)
class InitialSpec:
    """Initial body: ``sphere``, seeded ``random`` sample, or a single zonal ``harmonic``."""

    kind: str = "sphere"
    r0: float = 1.0
    amplitude: float = 0.0
    max_degree: int = 4
    seed: int = 0
    degree: int = 2

    def __post_init__(self):
        if self.kind not in ("sphere", "random", "harmonic"):
            raise ValueError(f"unknown initial kind {self.kind!r}")
        if not self.r0 > 0 or self.amplitude < 0:
            raise ValueError("need r0 > 0 and amplitude >= 0")


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of one flow run.

    ``alpha`` is the power applied to the speed by ``VMCF``; ``l`` is the
    index of the preserved modified quermassintegral for ``VMCF2``.
    """

    flow_kind: FlowKind
    speed: SpeedFunction
    grid: SphereGrid
    alpha: float = 1.0
    l: int = 0
    T_end: float = 1.0
    dt_safety: float = 0.2
    initial: InitialSpec = field(default_factory=InitialSpec)
    cadence_steps: int = 100
    snapshot_every: int = 0
    max_steps: int = 50_000_000

    def __post_init__(self):
        kind = FlowKind(self.flow_kind)
        object.__setattr__(self, "flow_kind", kind)
        n = self.grid.n
        self.speed.validate(n)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.T_end < 0 or self.dt_safety < 0:
            raise ValueError("T_end and dt_safety must be nonnegative")
        if self.cadence_steps < 1:
            raise ValueError("cadence_steps must be at least 1")
        if kind is FlowKind.VMCF2:
            if not self.speed.shifted:
                raise ValueError("VMCF2 needs a speed of the shifted curvatures")
            if not 0 <= self.l <= n:
                raise ValueError(f"constraint index l={self.l} outside 0..{n}")
            if self.speed.kind is SpeedKind.QUOTIENT and not self.l < self.speed.k:
                raise ValueError("QUOTIENT speeds need l < k")
        elif self.speed.shifted:
            raise ValueError("VMCF uses a speed of the principal curvatures")

    @property
    def tags(self):
        out = []
        if (
            self.flow_kind is FlowKind.VMCF
            and self.speed.kind is SpeedKind.SQRT_GAUSS_2D
            and not 0.5 <= self.alpha <= 2.0
        ):
            out.append("outside proven regime")
        return out


@dataclass(frozen=True)
class FlowRecord:
    step: int
    t: float
    W: tuple
    Wt: tuple
    phi_bar: float
    lambda_min: float
    lambda_max: float
    pinching: float
    G_pinch: float
    sect_min: float
    osc: float
    rho_minus: float
    rho_plus: float


@dataclass
class FlowResult:
    config: FlowConfig
    records: list
    snapshots: list  # (step, t, body) triples
    status: str
    message: str
    steps: int
    t_final: float
    initial: object
    final: object
    fitted_rate: float = None
    fit_r2: float = None
    tags: list = field(default_factory=list)

    def series(self, name):
        return np.array([getattr(r, name) for r in self.records])


# ------------------------------------------------------------------ initial data


def initial_body(cfg):
    init = cfg.initial
    grid = cfg.grid
    support = cfg.flow_kind is FlowKind.VMCF2
    if init.kind == "sphere" or init.amplitude == 0:
        return (SupportBody if support else RadialBody).sphere(grid, init.r0)
    if init.kind == "random":
        sampler = random_body if support else random_radial_body
        return sampler(grid, init.seed, init.r0, init.amplitude, init.max_degree)
    values = init.r0 + init.amplitude * harmonic(grid, init.degree)
    return SupportBody(grid, values) if support else RadialBody(grid, values)


# --------------------------------------------------------------- VMCF2 kernels


def _support_terms(grid, phi, speed, l, t=None):
    """Pieces of the support-function equation evaluated on ``phi``."""
    if not np.all(np.isfinite(phi)) or np.any(phi <= 0):
        raise HConvexityLost("support function became invalid", t)
    (grad, hess) = gradient_and_hessian(grid, phi)
    g2 = sum(c**2 for c in grad)
    A = hess.plus_identity(-g2 / (2.0 * phi) + 0.5 * (phi - 1.0 / phi))
    a = A.eigvals()
    if not a[..., 0].min() > HCONVEX_MARGIN:
        raise HConvexityLost(f"A lost positivity (min eigenvalue {a[..., 0].min():.3e})", t)
    b = 1.0 / a
    f_b = speed_value(speed, b)
    lam = b / phi[..., None]
    dmu = A.det() * grid.weights
    e_l = normalized_sigma(lam, l) if l > 0 else 1.0
    wl = e_l * dmu
    phi_bar = float(np.sum(wl * f_b / phi) / np.sum(wl))
    return f_b, phi_bar, a, b


def global_term_vmcf2(body, speed, l):
    """``E_l(lambda)``-weighted mean of ``F(lambda)`` over the boundary."""
    body.require_hconvex()
    return _support_terms(body.grid, body.phi, speed, l)[1]


def _vmcf2_rhs(grid, phi, cfg, t=None):
    f_b, phi_bar, _, _ = _support_terms(grid, phi, cfg.speed, cfg.l, t)
    return phi * phi_bar - f_b


# ---------------------------------------------------------------- VMCF kernels


def _radial_terms(grid, rho, speed, alpha, t=None):
    try:
        body = RadialBody(grid, rho)
        kappa = radial_curvatures(body)
        F = speed_value(speed, kappa)
    except (NonStarShaped, DomainError) as exc:
        raise DomainViolation(str(exc), t) from exc
    if np.any(F <= 0):
        raise DomainViolation("speed became nonpositive", t)
    Fa = F**alpha
    dmu = radial_area_element(body) * grid.weights
    phi_bar = float(np.sum(Fa * dmu) / np.sum(dmu))
    return body, kappa, Fa, phi_bar


def global_term_vmcf(body, speed, alpha):
    """Area-weighted mean of ``F(kappa)^alpha``."""
    return _radial_terms(body.grid, body.rho, speed, alpha)[3]


def _vmcf_rhs(grid, rho, cfg, t=None):
    body, _, Fa, phi_bar = _radial_terms(grid, rho, cfg.speed, cfg.alpha, t)
    return (phi_bar - Fa) * body.v


# --------------------------------------------------------------------- stepping


def cfl_dt(body, cfg):
    """Explicit stability step ``dt_safety * h^2 / D_max``.

    ``h`` is the smallest physical node spacing of the grid.  ``D_max`` is
    the largest diffusion coefficient of the linearized operator.
    """
    grid = body.grid
    if cfg.flow_kind is FlowKind.VMCF2:
        a = body.a
        if not a[..., 0].min() > HCONVEX_MARGIN:
            raise HConvexityLost("A is not positive definite")
        b = 1.0 / a
        fdot = speed_eval(cfg.speed, b).gradient
        d = np.max(fdot.max(axis=-1) * (b**2).max(axis=-1))
    else:
        kappa = body.kappa
        sv = speed_eval(cfg.speed, kappa)
        coef = cfg.alpha * sv.value ** (cfg.alpha - 1.0) * sv.gradient.max(axis=-1)
        d = np.max(coef / np.sinh(body.rho) ** 2)
    return float(cfg.dt_safety * grid.h_min**2 / d)


def _rk4(rhs, y, dt, t):
    k1 = rhs(y, t)
    k2 = rhs(y + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(y + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(y + dt * k3, t + dt)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_dt(body, cfg, dt, t):
    from .errors import CFLViolation

    if dt < 0:
        raise CFLViolation("negative time step", t)
    limit = cfl_dt(body, cfg)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds stability bound {limit:.3e}", t)


def step_vmcf2(body, cfg, dt, t=0.0, check=True):
    """One RK4 step of the support-function equation."""
    if check:
        _check_dt(body, cfg, dt, t)
    grid = body.grid
    phi = _rk4(lambda y, s: _vmcf2_rhs(grid, y, cfg, s), body.phi, dt, t)
    if not np.all(phi > 0):
        raise HConvexityLost("support function became invalid", t + dt)
    out = SupportBody.from_phi(grid, phi)
    if not out.min_eig > HCONVEX_MARGIN:
        raise HConvexityLost(f"A lost positivity (min eigenvalue {out.min_eig:.3e})", t + dt)
    return out


def step_vmcf(body, cfg, dt, t=0.0, check=True):
    """One RK4 step of the radial-graph equation."""
    if check:
        _check_dt(body, cfg, dt, t)
    grid = body.grid
    rho = _rk4(lambda y, s: _vmcf_rhs(grid, y, cfg, s), body.rho, dt, t)
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise DomainViolation("radius became invalid", t + dt)
    # the new state must stay in the domain of the speed
    return _radial_terms(grid, rho, cfg.speed, cfg.alpha, t + dt)[0]


# ------------------------------------------------------------------ diagnostics


def _boundary_points(body):
    if isinstance(body, SupportBody):
        return embed(body).X
    e = body.grid.directions()
    rho = body.rho[..., None]
    return np.concatenate([np.sinh(rho) * e, np.cosh(rho)], axis=-1)


def _recentred_distances(body, dmu):
    """Extreme distances from the normalized Minkowski centroid of the boundary.

    The centroid of a geodesic sphere on the hyperboloid is a multiple of its
    centre, so the recentring is exact for balls.
    """
    X = _boundary_points(body)
    w = dmu / np.sum(dmu)
    c = np.tensordot(w, X, axes=(list(range(w.ndim)), list(range(w.ndim))))
    if body.grid.axisymmetric_mode:
        c[:-2] = 0.0
    centre = c / np.sqrt(c[-1] ** 2 - c[:-1] @ c[:-1])
    prod = np.sum(X[..., :-1] * centre[:-1], axis=-1) - X[..., -1] * centre[-1]
    d = np.arccosh(np.maximum(-prod, 1.0))
    return float(d.min()), float(d.max())


def diagnostics(body, cfg, step=0, t=0.0):
    """Per-step diagnostic record of a body evolving under ``cfg``."""
    fv = functionals(body)
    grid = body.grid
    if cfg.flow_kind is FlowKind.VMCF2:
        lam = body.lam
        kappa = lam + 1.0
        phi_bar = global_term_vmcf2(body, cfg.speed, cfg.l)
        F = speed_value(cfg.speed, lam)
        osc = float(body.u.max() - body.u.min())
    else:
        kappa = body.kappa
        lam = kappa - 1.0
        phi_bar = global_term_vmcf(body, cfg.speed, cfg.alpha)
        F = speed_value(cfg.speed, kappa)
        osc = float(body.rho.max() - body.rho.min())
    dmu = body.area_weight * grid.weights
    lam1 = lam[..., 0]
    if np.all(lam1 > 0):
        pinching = float(np.max(lam[..., -1] / lam1))
    else:
        pinching = float("inf")
    # trace of the curvature argument of the speed over the speed
    arg = lam if cfg.flow_kind is FlowKind.VMCF2 else kappa
    G = float(np.max(np.sum(arg, axis=-1) / F))
    sect = float(np.min(kappa[..., 0] * kappa[..., 1] - 1.0))
    rho_minus, rho_plus = _recentred_distances(body, dmu)
    return FlowRecord(
        step=step,
        t=float(t),
        W=fv.W,
        Wt=fv.Wt,
        phi_bar=phi_bar,
        lambda_min=float(lam.min()),
        lambda_max=float(lam.max()),
        pinching=pinching,
        G_pinch=G,
        sect_min=sect,
        osc=osc,
        rho_minus=rho_minus,
        rho_plus=rho_plus,
    )


def fit_decay(t, osc, floor=1e-12):
    """Least-squares fit ``log osc = c - rate t``; returns ``(rate, r2)`` or ``(None, None)``."""
    t = np.asarray(t, dtype=float)
    osc = np.asarray(osc, dtype=float)
    if t.size == 0:
        return None, None
    keep = (t >= t[0] + 0.5 * (t[-1] - t[0])) & (osc > floor)
    if keep.sum() < 3:
        return None, None
    tt, y = t[keep], np.log(osc[keep])
    slope, icpt = np.polyfit(tt, y, 1)
    resid = y - (slope * tt + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(-slope), float(r2)


CONVERGED_OSC = 1e-3


def _with_time(exc, t):
    msg = str(exc)
    return msg if "t=" in msg else f"{msg} (t={t!r})"


def run(cfg, progress=None):
    """Integrate ``cfg`` to ``T_end`` and collect diagnostics.

    The run stops early with status ``hconvexity_lost`` or
    ``domain_violation`` when the state leaves its admissible region.
    """
    body = initial_body(cfg)
    start = body
    stepper = step_vmcf2 if cfg.flow_kind is FlowKind.VMCF2 else step_vmcf
    records = [diagnostics(body, cfg, 0, 0.0)]
    snapshots = [(0, 0.0, body)] if cfg.snapshot_every else []
    t, step = 0.0, 0
    status, message = "completed", ""
    T = float(cfg.T_end)
    while t < T * (1.0 - 1e-14) and step < cfg.max_steps:
        try:
            dt = cfl_dt(body, cfg)
            if dt <= 0:
                status, message = "stalled", "stability bound vanished"
                break
            dt = min(dt, T - t)
            new = stepper(body, cfg, dt, t, check=False)
            t_new = T if T - t - dt <= 1e-14 * max(T, 1.0) else t + dt
            record = None
            if (step + 1) % cfg.cadence_steps == 0 or t_new >= T:
                record = diagnostics(new, cfg, step + 1, t_new)
        except (HConvexityLost, NotHConvex) as exc:
            status, message = "hconvexity_lost", _with_time(exc, t)
            break
        except (DomainViolation, DomainError) as exc:
            status, message = "domain_violation", _with_time(exc, t)
            break
        body, t, step = new, t_new, step + 1
        if record is not None:
            records.append(record)
            if progress is not None:
                progress(record)
        if cfg.snapshot_every and (step % cfg.snapshot_every == 0 or t >= T):
            snapshots.append((step, t, body))
    if records[-1].step != step:
        records.append(diagnostics(body, cfg, step, t))
        if cfg.snapshot_every and snapshots[-1][0] != step:
            snapshots.append((step, t, body))
    rate, r2 = fit_decay([r.t for r in records], [r.osc for r in records])
    if status == "completed" and records[-1].osc <= CONVERGED_OSC:
        status = "converged"
    return FlowResult(
        config=cfg,
        records=records,
        snapshots=snapshots,
        status=status,
        message=message,
        steps=step,
        t_final=t,
        initial=start,
        final=body,
        fitted_rate=rate,
        fit_r2=r2,
        tags=cfg.tags,
    )
