"""Ground states: fixed frequency (Nehari), normalized, localized and intercritical.

All solvers share one semi-implicit step: the kinetic operator is treated
implicitly in Fourier space and the nonlinearity |u|^alpha u explicitly, with
2/3-rule dealiasing of the nonlinear term.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import functionals as fn
from .params import Criticality, Kind, ModelParams
from .spectral import Field, Grid, _power, kinetic_symbol

log = logging.getLogger(__name__)


class InitKind(enum.Enum):
    GAUSSIAN_FLAT = "gaussian-flat"
    GAUSSIAN_YBROKEN = "gaussian-ybroken"
    FROM_FILE = "from-file"


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    residual_tol: float = 1e-8
    max_iter: int = 20000
    tau: float = 0.5
    init: InitKind = InitKind.GAUSSIAN_YBROKEN
    epsilon: float = 0.1
    width: float = 1.0
    path: Optional[str] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not isinstance(self.init, InitKind):
            object.__setattr__(self, "init", InitKind(self.init))
        if self.init is InitKind.FROM_FILE and not self.path:
            raise ValueError("init=from-file needs a path")


@dataclass
class GroundStateResult:
    field: Field
    omega: float
    report: fn.FunctionalReport
    c_value: float
    nehari_residual: float
    pohozaev_residual: float
    y_dependence: float
    iterations: int
    converged: bool
    equation_residual: float = math.nan
    history: list = field(default_factory=list, repr=False)


class RegimeError(ValueError):
    pass


class GuardError(RuntimeError):
    pass


def initial_field(grid: Grid, cfg: SolverConfig) -> Field:
    if cfg.init is InitKind.FROM_FILE:
        from .io import read_snapshot

        u, _ = read_snapshot(cfg.path)
        if u.grid != grid:
            raise ValueError(f"snapshot grid {u.grid} does not match {grid}")
        vals = u.values
    else:
        vals = np.exp(-0.5 * grid.r2 / cfg.width**2).astype(complex)
        if cfg.init is InitKind.GAUSSIAN_YBROKEN and grid.m:
            vals = vals * (1.0 + cfg.epsilon * sum(np.cos(grid.y(j)) for j in range(grid.m)) / grid.m)
    if not np.all(np.isfinite(vals)) or not np.any(vals != 0):
        raise ValueError("initial field is zero or non-finite")
    return Field(grid, vals)


def phase_normalize(values: np.ndarray) -> np.ndarray:
    j = np.argmax(np.abs(values))
    z = values.flat[j]
    return values * (abs(z) / z)


def _pohozaev_scale(u: Field, params: ModelParams) -> float:
    """||u||_{H^sigma}^2 used to normalize Pohozaev residuals."""
    return fn.kinetic(u, params) + fn.mass(u)


class _Stepper:
    """Shared spectral pieces of the semi-implicit iteration."""

    def __init__(self, grid: Grid, params: ModelParams):
        self.grid = grid
        self.params = params
        self.sym = kinetic_symbol(grid, params)
        self.mask = grid.dealias_mask
        self.w = grid.weight
        self.a = params.alpha

    def nonlinear_hat(self, vals: np.ndarray) -> np.ndarray:
        return self.grid.forward(np.abs(vals) ** self.a * vals) * self.mask

    def pieces(self, vals: np.ndarray, hat: np.ndarray) -> tuple:
        """(kinetic, mass, lp)."""
        pw = np.abs(hat) ** 2
        return (
            float(np.sum(self.sym * pw)),
            float(np.sum(pw)),
            float(np.sum(np.abs(vals) ** (self.a + 2.0))) * self.w,
        )

    def residual(self, vals: np.ndarray, hat: np.ndarray, omega: float) -> float:
        """Relative equation residual measured in Fourier space (dealiased)."""
        r = (self.sym + omega) * hat - self.nonlinear_hat(vals)
        return math.sqrt(float(np.sum(np.abs(r) ** 2)) / float(np.sum(np.abs(hat) ** 2)))


def _finish(u_vals, grid, params, omega, c_value, nehari, iters, converged, hist, normalized) -> GroundStateResult:
    u = Field(grid, phase_normalize(u_vals))
    rep = fn.report(u, params, omega)
    scale = _pohozaev_scale(u, params)
    y_dep = rep.y_kinetic / rep.kinetic if rep.kinetic > 0 else 0.0
    return GroundStateResult(
        field=u,
        omega=omega,
        report=rep,
        c_value=c_value,
        nehari_residual=nehari,
        pohozaev_residual=abs(rep.pohozaev) / scale,
        y_dependence=y_dep,
        iterations=iters,
        converged=converged,
        equation_residual=fn.equation_residual(u, omega, params),
        history=hist,
    )


def _check_subsobolev(params: ModelParams):
    if params.criticality() is Criticality.SUPERCRITICAL:
        raise RegimeError(f"alpha={params.alpha} is not below the Sobolev exponent {params.sobolev_exponent}")


def _require_nonzero(vals: np.ndarray):
    if not np.all(np.isfinite(vals)) or not np.any(vals != 0):
        raise ValueError("initial field is zero or non-finite")


def solve_fixed_frequency(
    params: ModelParams, omega: float, grid: Grid, cfg: SolverConfig = SolverConfig(), u0: Optional[Field] = None
) -> GroundStateResult:
    """Minimize the action at frequency omega over the Nehari manifold.

    Each iteration takes u <- (1 + tau (L + omega))^-1 (u + tau |u|^alpha u)
    and rescales by ell with ell^alpha = (||L^(1/2) u||^2 + omega ||u||^2) /
    ||u||_{alpha+2}^{alpha+2}, which puts the iterate back on B_omega = 0.
    On that manifold the action equals alpha/(2(alpha+2)) (kinetic + omega mass);
    a step that would raise it is retried with half the pseudo-time step.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    _check_subsobolev(params)
    st = _Stepper(grid, params)
    vals = (u0 if u0 is not None else initial_field(grid, cfg)).values.copy()
    _require_nonzero(vals)
    a = params.alpha
    hat = grid.forward(vals) * st.mask
    vals = grid.inverse(hat)

    def project(vals, hat):
        kin, mss, lp = st.pieces(vals, hat)
        ell = ((kin + omega * mss) / lp) ** (1.0 / a)
        return vals * ell, hat * ell, a / (2.0 * (a + 2.0)) * ell**2 * (kin + omega * mss)

    vals, hat, act = project(vals, hat)
    hist = [act]
    converged = False
    tau = cfg.tau
    it = 0
    for it in range(1, cfg.max_iter + 1):
        nl = st.nonlinear_hat(vals)
        while True:
            cand = (hat + tau * nl) / (1.0 + tau * (st.sym + omega))
            cvals, chat, cact = project(grid.inverse(cand), cand)
            if cact <= act * (1.0 + 1e-14) or tau < 1e-8:
                break
            tau *= 0.5
        change = abs(cact - act) / abs(cact)
        vals, hat, act = cvals, chat, cact
        tau = min(cfg.tau, tau * 1.25)
        hist.append(act)
        if change < cfg.tol or it % 25 == 0:
            if change < cfg.tol and st.residual(vals, hat, omega) < cfg.residual_tol:
                converged = True
                break
    kin, mss, lp = st.pieces(vals, hat)
    nehari = abs(kin + omega * mss - lp) / (kin + omega * mss)
    return _finish(vals, grid, params, omega, act, nehari, it, converged, hist, False)


def solve_reference_rd(
    params: ModelParams, grid: Grid, cfg: SolverConfig = SolverConfig(), omega: float = 1.0
) -> GroundStateResult:
    """Ground state Q_omega of the y-free problem on R^d; c_value is nu_omega.

    ``grid`` may carry torus axes; only its x-sampling is used.
    """
    cfg = replace(cfg, init=InitKind.GAUSSIAN_FLAT) if cfg.init is not InitKind.FROM_FILE else cfg
    return solve_fixed_frequency(params.flat(), omega, grid.flat(), cfg)


def nu_scaling_exponent(params: ModelParams) -> float:
    """p with nu_omega = omega^p nu_1 (and c_omega = omega^p cbar_omega).

    From u(x) -> omega^(1/alpha) u(omega^(1/(2 sigma)) x) on R^d.
    """
    return (params.alpha + 2.0) / params.alpha - params.d / (2.0 * params.sigma)


def rescale_reference(q1: Field, params: ModelParams, omega: float) -> Field:
    """Q_omega(x) = omega^(1/alpha) Q_1(omega^(1/(2 sigma)) x), resampled on q1's grid."""
    t = omega ** (1.0 / (2.0 * params.sigma))
    scaled = fn.scale_fiber(q1, t)
    return scaled * (omega ** (1.0 / params.alpha) * t ** (-q1.grid.d / 2.0))


def extend_flat(u: Field, grid: Grid) -> Field:
    """Constant extension in y of an R^d field onto ``grid``."""
    if u.grid != grid.flat():
        raise ValueError("x-sampling mismatch")
    vals = u.values.reshape(u.values.shape + (1,) * grid.m) + np.zeros(grid.shape)
    return Field(grid, vals)


# --- normalized problems ------------------------------------------------------


def _mass_rescale(vals, hat, c, w_mass):
    f = math.sqrt(c / w_mass)
    return vals * f, hat * f


def _normalized_flow(
    params: ModelParams,
    c: float,
    grid: Grid,
    cfg: SolverConfig,
    u0: Optional[Field],
    rho: Optional[float] = None,
):
    """Shared loop for the mass-constrained solvers.

    Step: s = max(omega_n, 0), u* = (1 + tau (L + s))^-1 ((1 + tau (s - omega_n)) u + tau N(u)),
    with omega_n = (||u||_p^p - <Lu, u>) / ||u||^2 the current Lagrange
    multiplier, so an exact ground state is a fixed point for every tau.
    Then u* is rescaled to mass c. Steps that raise the energy (or leave the
    ball ||L^(1/2)u||^2 < rho) are retried with tau halved.
    """
    if not c > 0:
        raise ValueError(f"mass must be positive, got {c}")
    st = _Stepper(grid, params)
    vals = (u0 if u0 is not None else initial_field(grid, cfg)).values.copy()
    _require_nonzero(vals)
    hat = grid.forward(vals) * st.mask
    vals = grid.inverse(hat)
    vals, hat = _mass_rescale(vals, hat, c, float(np.sum(np.abs(hat) ** 2)))
    a2 = params.alpha + 2.0

    kin, mss, lp = st.pieces(vals, hat)
    if rho is not None and kin >= rho:
        raise GuardError(f"initial kinetic energy {kin:g} is outside the ball of radius {rho:g}")
    en = 0.5 * kin - lp / a2
    hist = [en]
    tau = cfg.tau
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        om = (lp - kin) / mss
        s = max(om, 0.0)
        nl = st.nonlinear_hat(vals)
        rejected = 0
        while True:
            cand = ((1.0 + tau * (s - om)) * hat + tau * nl) / (1.0 + tau * (st.sym + s))
            cv, ch = _mass_rescale(grid.inverse(cand), cand, c, float(np.sum(np.abs(cand) ** 2)))
            ckin, cmss, clp = st.pieces(cv, ch)
            cen = 0.5 * ckin - clp / a2
            ok = cen <= en + 1e-14 * abs(en)
            if rho is not None and ckin >= rho:
                ok = False
            if ok:
                break
            rejected += 1
            tau *= 0.5
            if tau < 1e-10:
                if rho is not None and ckin >= rho:
                    raise GuardError("trust-region guard stays active; mass too large for this radius")
                break
        change = abs(cen - en) / max(abs(cen), 1e-300)
        vals, hat, kin, mss, lp, en = cv, ch, ckin, cmss, clp, cen
        hist.append(en)
        if not rejected:
            tau = min(cfg.tau, tau * 1.25)
        if change < cfg.tol or it % 25 == 0:
            om = (lp - kin) / mss
            if change < cfg.tol and st.residual(vals, hat, om) < cfg.residual_tol:
                converged = True
                break
    om = (lp - kin) / mss
    res = _finish(vals, grid, params, om, en, 0.0, it, converged, hist, True)
    return res


def _flat_competitor_c(c: float, params: ModelParams) -> float:
    return (2.0 * np.pi) ** (-params.m) * c


def solve_normalized_subcritical(
    params: ModelParams, c: float, grid: Grid, cfg: SolverConfig = SolverConfig(), u0: Optional[Field] = None
) -> GroundStateResult:
    """Energy minimizer on the mass sphere ||u||^2 = c for alpha < 4 sigma/(d+m)."""
    if params.criticality() not in (Criticality.SUBCRITICAL, Criticality.MASS_CRITICAL):
        raise RegimeError(f"alpha={params.alpha} is not mass-subcritical (threshold {params.mass_critical_exponent})")
    res = _normalized_flow(params, c, grid, cfg, u0)
    if res.converged and not (res.c_value < 0 and res.omega > 0):
        log.warning("normalized minimizer has E=%g, omega_c=%g; expected E<0<omega_c", res.c_value, res.omega)
    return res


def solve_normalized_localized(
    params: ModelParams,
    c: float,
    rho0: float,
    grid: Grid,
    cfg: SolverConfig = SolverConfig(),
    u0: Optional[Field] = None,
) -> GroundStateResult:
    """Local energy minimizer on the mass sphere inside {||(-Delta)^(sigma/2) u||^2 < rho0}."""
    lo = params.mass_critical_exponent
    hi = min(4.0 * params.sigma / params.d, params.sobolev_exponent)
    if not lo < params.alpha < hi:
        raise RegimeError(f"alpha={params.alpha} outside ({lo:g}, {hi:g})")
    if u0 is None:
        u0 = initial_field(grid, cfg)
        # start well inside the ball
        kin = fn.kinetic(u0, params) * c / fn.mass(u0)
        if kin >= 0.5 * rho0:
            u0 = fn.scale_fiber(u0, math.sqrt(0.5 * rho0 / kin) ** (1.0 / params.sigma), check_band=False)
    return _normalized_flow(params, c, grid, cfg, u0, rho=rho0)


def _check_intercritical(params: ModelParams):
    """Admissible (sigma, alpha) for the Pohozaev-constrained problem.

    sigma = 1 is admitted as the classical limit; it is the only case whose
    ground states decay exponentially, which is what makes tight checks
    possible on a periodic box.
    """
    s, a, d = params.sigma, params.alpha, params.d
    if params.kind is Kind.ANISOTROPIC:
        if not 0.5 < s <= 1.0:
            raise RegimeError(f"anisotropic intercritical problem needs sigma in (1/2, 1], got {s}")
        if not (4.0 * s / d < a < params.sobolev_exponent):
            raise RegimeError(f"alpha={a} outside (4 sigma/d, 2_sigma^*) = ({4 * s / d:g}, {params.sobolev_exponent:g})")
    else:
        if params.m not in (0, 1):
            raise RegimeError("isotropic intercritical problem needs m = 1")
        if params.m == 1 and not (d + 1.0) / (d + 2.0) < s <= 1.0:
            raise RegimeError(f"isotropic intercritical problem needs sigma in ((d+1)/(d+2), 1], got {s}")
        if not (4.0 / d <= a < params.sobolev_exponent):
            raise RegimeError(f"alpha={a} outside [4/d, 2_sigma^*) = [{4 / d:g}, {params.sobolev_exponent:g})")


def solve_intercritical(
    params: ModelParams, c: float, grid: Grid, cfg: SolverConfig = SolverConfig(), u0: Optional[Field] = None
) -> GroundStateResult:
    """Minimize E over {||u||^2 = c, Q(u) = 0} through the fibered energy u -> E(u^{t*(u)})."""
    _check_intercritical(params)
    if u0 is None and cfg.init is not InitKind.FROM_FILE:
        # a Gaussian start is moved along its fiber by changing its width,
        # which is exact, instead of resampling; the width stays resolvable
        def start(w):
            u = initial_field(grid, replace(cfg, width=w))
            return u * math.sqrt(c / fn.mass(u))

        w_lo, w_hi = 2.0 * grid.dx, grid.lx / 4.0
        g = lambda lw: math.log(fn.fiber_critical_t(start(math.exp(lw)), params))
        g_lo, g_hi = g(math.log(w_lo)), g(math.log(w_hi))
        if g_lo <= 0.0:
            w = w_lo
        elif g_hi >= 0.0:
            w = w_hi
        else:
            w = math.exp(brentq(g, math.log(w_lo), math.log(w_hi), xtol=1e-6))
        u0 = start(w)
    return _fibered_flow(params, c, grid, cfg, u0)


def fiber_symbol(grid: Grid, params: ModelParams, t: float) -> np.ndarray:
    """Kinetic symbol evaluated at (t xi, k): the quadratic form of u^t read on u."""
    s, lam = params.sigma, params.lam
    if params.kind is Kind.ANISOTROPIC:
        return t ** (2 * s) * _power(grid.xi2, s) + lam**s * _power(grid.k2, s)
    return _power(t * t * grid.xi2 + lam * grid.k2, s)


def _fibered_flow(params: ModelParams, c: float, grid: Grid, cfg: SolverConfig, u0: Optional[Field]):
    """Descent on F(u) = E(u^{t*(u)}) over the mass sphere.

    Since t* maximizes t -> E(u^t), the gradient of F at u is the energy
    gradient of u^{t*} read back on u: kinetic symbol L(t* xi, k) and
    nonlinearity weighted by t*^(alpha d/2). F is fiber-invariant on R^d but
    not on the periodic box, so the iterate slowly drifts along the fiber; it
    is resampled back to t* = 1 once the drift exceeds 2%. ``history`` holds
    the objective after each accepted step, before any such resampling.
    """
    if not c > 0:
        raise ValueError(f"mass must be positive, got {c}")
    mask = grid.dealias_mask
    a = params.alpha
    pexp = a * grid.d / 2.0
    vals = (u0 if u0 is not None else initial_field(grid, cfg)).values.copy()
    _require_nonzero(vals)

    def normalize(v):
        h = grid.forward(v) * mask
        h = h * math.sqrt(c / float(np.sum(np.abs(h) ** 2)))
        return grid.inverse(h), h

    def state(v):
        u = Field(grid, v)
        t = fn.fiber_critical_t(u, params)
        return t, fn.FiberProfile(u, params).energy(t)

    def recentre(v, t):
        v, h = normalize(fn.scale_fiber(Field(grid, v), t, check_band=False).values)
        t2, f2 = state(v)
        return v, h, t2, f2

    vals, hat = normalize(vals)
    t, en = state(vals)
    if abs(math.log(t)) > 0.05:
        vals, hat, t, en = recentre(vals, t)
    hist = [en]
    tau = cfg.tau
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        sym = fiber_symbol(grid, params, t)
        g = t**pexp
        nl = g * grid.forward(np.abs(vals) ** a * vals) * mask
        pw = np.abs(hat) ** 2
        om = (float(np.real(np.vdot(hat, nl))) - float(np.sum(sym * pw))) / float(np.sum(pw))
        sh = max(om, 0.0)
        rejected = 0
        while True:
            cand = ((1.0 + tau * (sh - om)) * hat + tau * nl) / (1.0 + tau * (sym + sh))
            cv, ch = normalize(grid.inverse(cand))
            ct, cen = state(cv)
            if cen <= en + 1e-14 * abs(en) or tau < 1e-10:
                break
            rejected += 1
            tau *= 0.5
        change = abs(cen - en) / max(abs(cen), 1e-300)
        vals, hat, t, en = cv, ch, ct, cen
        hist.append(en)
        if abs(math.log(t)) > 0.02:
            vals, hat, t, en = recentre(vals, t)
        if not rejected:
            tau = min(cfg.tau, tau * 1.25)
        if change < cfg.tol or it % 25 == 0:
            sym = fiber_symbol(grid, params, t)
            nl = t**pexp * grid.forward(np.abs(vals) ** a * vals) * mask
            om = (float(np.real(np.vdot(hat, nl))) - float(np.sum(sym * np.abs(hat) ** 2))) / c
            res = math.sqrt(float(np.sum(np.abs((sym + om) * hat - nl) ** 2)) / c)
            log.debug("it=%d tau=%g t=%g en=%.15g change=%g res=%g", it, tau, t, en, change, res)
            if change < cfg.tol and res < cfg.residual_tol:
                converged = True
                break
    if t != 1.0:
        vals, hat = normalize(fn.scale_fiber(Field(grid, vals), t, check_band=False).values)
    st = _Stepper(grid, params)
    kin, mss, lp = st.pieces(vals, hat)
    om = (lp - kin) / mss
    return _finish(vals, grid, params, om, en, 0.0, it, converged, hist, True)
