"""Bifurcation scans, Gagliardo-Nirenberg constants and the localized-problem constants.

A scan samples a parameter, decides for each value whether the computed
ground state is genuinely y-dependent, and bisects between the last
y-independent and the first y-dependent sample. A sample counts as
y-dependent when its minimum lies below the y-flat competitor by more than
``margin * |flat|`` and its y-kinetic share exceeds ``eta``.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import functionals as fn
from . import ground_state as gs
from .params import Criticality, Kind, ModelParams
from .spectral import Field, Grid, _power, _workers

log = logging.getLogger(__name__)


class ScanParameter(enum.Enum):
    OMEGA = "omega"
    MASS = "mass"
    LAMBDA = "lambda"


class Indicator(enum.Enum):
    Y_DEPENDENCE = "y-dependence"
    GAP_TO_FLAT = "gap-to-flat"


class ScanError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    margin: float = 1e-6
    eta: float = 1e-6
    n_samples: int = 8
    max_bisections: int = 40

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("a scan needs at least two samples")
        if not (self.margin >= 0 and self.eta >= 0):
            raise ValueError("margins must be non-negative")


@dataclass(frozen=True)
class Sample:
    value: float
    minimum: float
    y_dependence: float
    flat_reference: float
    indicator: bool
    converged: bool = True


@dataclass
class ScanResult:
    parameter_name: ScanParameter
    samples: list
    threshold: float
    bracket: tuple
    indicator: Indicator = Indicator.GAP_TO_FLAT
    one_sided: bool = False
    # samples added by the bisection, in evaluation order
    refinements: list = field(default_factory=list)

    def certificate(self) -> tuple:
        """Indicator values at the two bracket ends."""
        ends = {s.value: s.indicator for s in self.samples + self.refinements}
        return ends.get(self.bracket[0]), ends.get(self.bracket[1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "minimum", "y_dependence", "flat_reference", "indicator"])
        for s in self.samples:
            w.writerow([_fmt(s.value), _fmt(s.minimum), _fmt(s.y_dependence), _fmt(s.flat_reference), int(s.indicator)])
        w.writerow(["threshold", _fmt(self.threshold), _fmt(self.bracket[0]), _fmt(self.bracket[1]), int(self.one_sided)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    # shortest string that round-trips the double
    return repr(float(x))


def _indicator(minimum: float, flat: float, y_dep: float, sc: ScanConfig) -> bool:
    return minimum < flat - sc.margin * abs(flat) and y_dep > sc.eta


def _map(func: Callable, items: Sequence) -> list:
    n = min(_workers(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(func, items))


def _sample_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if not 0 < lo < hi:
        raise ValueError(f"range must satisfy 0 < lo < hi, got ({lo}, {hi})")
    return np.geomspace(lo, hi, n)


def _run_scan(
    name: ScanParameter,
    evaluate: Callable[[float], Sample],
    values: np.ndarray,
    resolution: float,
    increasing: bool,
    sc: ScanConfig,
) -> ScanResult:
    """Sample, check monotonicity of the indicator, then bisect.

    ``increasing`` means the indicator is expected to switch from false to
    true as the parameter grows.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    samples = sorted(_map(evaluate, list(values)), key=lambda s: s.value)
    flags = [s.indicator for s in samples]
    if not increasing:
        flags = flags[::-1]
    if all(flags) or not any(flags):
        log.warning("indicator constant over the scanned range; bracket is one-sided")
        return ScanResult(name, samples, math.nan, (samples[0].value, samples[-1].value), one_sided=True)
    first = flags.index(True)
    if not all(flags[first:]):
        raise ScanError("indicator is not monotone over the sampled values")
    seq = samples if increasing else samples[::-1]
    a, b = seq[first - 1], seq[first]
    # a: indicator false, b: indicator true
    refinements = []
    for _ in range(sc.max_bisections):
        if abs(b.value - a.value) <= resolution:
            break
        mid = evaluate(math.sqrt(a.value * b.value))
        refinements.append(mid)
        if mid.indicator:
            b = mid
        else:
            a = mid
    lo, hi = sorted((a.value, b.value))
    return ScanResult(name, samples, 0.5 * (lo + hi), (lo, hi), refinements=refinements)


# --- omega -------------------------------------------------------------------


class _OmegaEval:
    """Picklable evaluator for one frequency (rescaled problem at unit frequency)."""

    def __init__(self, params, grid, cfg, nu1, sc):
        self.params, self.grid, self.cfg, self.nu1, self.sc = params, grid, cfg, nu1, sc

    def __call__(self, omega: float) -> Sample:
        p = self.params
        scaled = replace(p, lam=omega ** (-1.0 / p.sigma))
        res = gs.solve_fixed_frequency(scaled, 1.0, self.grid, self.cfg)
        flat_bar = (2.0 * np.pi) ** p.m * self.nu1
        ind = _indicator(res.c_value, flat_bar, res.y_dependence, self.sc)
        w = omega ** gs.nu_scaling_exponent(p)
        return Sample(float(omega), float(w * res.c_value), float(res.y_dependence), float(w * flat_bar), ind, res.converged)


def scan_omega_threshold(
    params: ModelParams,
    omega_range: tuple,
    resolution: float,
    grid: Grid,
    cfg: gs.SolverConfig = gs.SolverConfig(),
    sc: ScanConfig = ScanConfig(),
) -> ScanResult:
    """Locate omega* where c_omega drops below (2 pi)^m nu_omega.

    Each frequency is solved in the rescaled form: c_omega = omega^p cbar_omega
    with cbar_omega the unit-frequency action for the symbol
    (|xi|^2 + omega^(-1/sigma)|k|^2)^sigma. The y-flat competitor is then the
    same Q_1 for every omega, computed once on the same x-grid, so both
    sides of the comparison carry identical discretization error.
    """
    if params.kind is not Kind.ISOTROPIC:
        raise gs.RegimeError("the omega scan is defined for the isotropic model")
    if params.m < 1:
        raise gs.RegimeError("the omega scan needs a torus factor (m >= 1)")
    ref = gs.solve_reference_rd(params, grid, cfg)
    ev = _OmegaEval(params, grid, cfg, ref.c_value, sc)
    return _run_scan(ScanParameter.OMEGA, ev, _sample_grid(*omega_range, sc.n_samples), resolution, True, sc)


# --- mass and lambda -------------------------------------------------------------


def _normalized_solver(params: ModelParams):
    crit = params.criticality()
    if crit in (Criticality.SUBCRITICAL, Criticality.MASS_CRITICAL):
        return gs.solve_normalized_subcritical, True
    if crit is Criticality.INTERCRITICAL:
        gs._check_intercritical(params)
        return gs.solve_intercritical, False
    raise gs.RegimeError(f"alpha={params.alpha} is outside the supported regimes ({crit.value})")


class _NormalizedEval:
    def __init__(self, params, grid, cfg, sc, vary: ScanParameter, mass: float = 1.0):
        self.params, self.grid, self.cfg, self.sc, self.vary, self.mass = params, grid, cfg, sc, vary, mass
        self._flat = None

    def __call__(self, value: float) -> Sample:
        p = self.params
        c = self.mass
        if self.vary is ScanParameter.MASS:
            c = value
        else:
            p = replace(p, lam=value)
        solver, _ = _normalized_solver(p)
        res = solver(p, c, self.grid, self.cfg)
        # lambda does not enter the y-free problem
        if self.vary is ScanParameter.LAMBDA and self._flat is not None:
            flat = self._flat
        else:
            flat = self._flat = flat_normalized_reference(p, c, self.grid, self.cfg)
        ind = _indicator(res.c_value, flat, res.y_dependence, self.sc)
        return Sample(float(value), float(res.c_value), float(res.y_dependence), float(flat), ind, res.converged)


def flat_normalized_reference(params: ModelParams, c: float, grid: Grid, cfg: gs.SolverConfig) -> float:
    """(2 pi)^m times the y-free minimum at mass (2 pi)^-m c, on the same x-grid."""
    flat = params.flat()
    c_flat = (2.0 * np.pi) ** (-params.m) * c
    fcfg = replace(cfg, init=gs.InitKind.GAUSSIAN_FLAT)
    if params.criticality() is Criticality.INTERCRITICAL:
        res = gs.solve_intercritical(flat, c_flat, grid.flat(), fcfg)
    else:
        res = gs.solve_normalized_subcritical(flat, c_flat, grid.flat(), fcfg)
    return (2.0 * np.pi) ** params.m * res.c_value


def scan_mass_threshold(
    params: ModelParams,
    c_range: tuple,
    resolution: float,
    grid: Grid,
    cfg: gs.SolverConfig = gs.SolverConfig(),
    sc: ScanConfig = ScanConfig(),
) -> ScanResult:
    """Locate c* separating y-flat from y-dependent normalized ground states.

    Mass-subcritical: y-dependence sets in for large c. Intercritical: for
    small c, so the indicator direction is reversed.
    """
    _, increasing = _normalized_solver(params)
    ev = _NormalizedEval(params, grid, cfg, sc, ScanParameter.MASS)
    return _run_scan(ScanParameter.MASS, ev, _sample_grid(*c_range, sc.n_samples), resolution, increasing, sc)


def scan_lambda_threshold(
    params: ModelParams,
    lambda_range: tuple,
    resolution: float,
    grid: Grid,
    cfg: gs.SolverConfig = gs.SolverConfig(),
    sc: ScanConfig = ScanConfig(),
    mass: float = 1.0,
) -> ScanResult:
    """Locate lambda* for the symbol (|xi|^2 + lambda |k|^2)^sigma at fixed mass.

    Small lambda makes y-variation cheap, so the indicator is true below lambda*.
    """
    if params.m != 1:
        raise gs.RegimeError("the lambda scan is defined for m = 1")
    _normalized_solver(params)
    ev = _NormalizedEval(params, grid, cfg, sc, ScanParameter.LAMBDA, mass=mass)
    return _run_scan(
        ScanParameter.LAMBDA, ev, _sample_grid(*lambda_range, sc.n_samples), resolution, False, sc
    )


# --- Gagliardo-Nirenberg constants --------------------------------------------------


class GNMode(enum.Enum):
    SAMPLING = "sampling"
    WEINSTEIN_OPTIM = "weinstein-optim"


@dataclass(frozen=True)
class GNEstimate:
    """Lower bounds for the best constant; ``value`` is the larger one."""

    value: float
    sampling: float
    optimized: float
    seed: int
    n_samples: int
    scale_invariant: bool = False


def _log_quotient(vals: np.ndarray, grid: Grid, params: ModelParams, scale_invariant: bool):
    """log of the GN quotient and its L^2 gradient in u."""
    a, s, d = params.alpha, params.sigma, params.d
    hat = grid.forward(vals)
    pw = np.abs(hat) ** 2
    mass_ = float(np.sum(pw))
    lp = float(np.sum(np.abs(vals) ** (a + 2.0))) * grid.weight
    dlp = (a + 2.0) * np.abs(vals) ** a * vals / lp
    if not scale_invariant:
        th = fn.gn_exponent(params)
        lsym = _power(grid.xi2 + grid.k2, s)
        h = mass_ + float(np.sum(lsym * pw))
        j = math.log(lp) / (a + 2.0) - 0.5 * (1 - th) * math.log(mass_) - 0.5 * th * math.log(h)
        grad = dlp / (a + 2.0) - (1 - th) * vals / mass_ - th * grid.inverse((1.0 + lsym) * hat) / h
        return j, grad
    lx, ly = _power(grid.xi2, s), _power(grid.k2, s)
    kx, ky = float(np.sum(lx * pw)), float(np.sum(ly * pw))
    ea, eb, ec = a * d / (4 * s), (4 * s - a * (d + 1 - 2 * s)) / (4 * s), a / (4 * s)
    tail = mass_**ec + ky**ec
    j = math.log(lp) - ea * math.log(kx) - eb * math.log(mass_) - math.log(tail)
    # for y-flat u the factor ky^(ec-1) blows up but multiplies L_y u = 0
    dky = ky ** (ec - 1) * grid.inverse(ly * hat) if ky > 0 else 0.0
    grad = (
        dlp
        - 2 * ea * grid.inverse(lx * hat) / kx
        - 2 * eb * vals / mass_
        - 2 * ec * (mass_ ** (ec - 1) * vals + dky) / tail
    )
    return j, grad


def _ascend(vals: np.ndarray, grid: Grid, params: ModelParams, scale_invariant: bool, iters: int) -> float:
    """Preconditioned gradient ascent with backtracking; the quotient is 0-homogeneous."""
    pre = 1.0 / (1.0 + _power(grid.xi2 + grid.k2, params.sigma))
    vals = vals / math.sqrt(float(np.sum(np.abs(grid.forward(vals)) ** 2)))
    j, g = _log_quotient(vals, grid, params, scale_invariant)
    eta = 1.0
    for _ in range(iters):
        step = grid.inverse(pre * grid.forward(g))
        while eta > 1e-12:
            cand = vals + eta * step
            cand = cand / math.sqrt(float(np.sum(np.abs(grid.forward(cand)) ** 2)))
            cj, cg = _log_quotient(cand, grid, params, scale_invariant)
            if np.isfinite(cj) and cj > j:
                break
            eta *= 0.5
        else:
            break
        if cj - j < 1e-13:
            j = cj
            break
        vals, j, g = cand, cj, cg
        eta = min(4.0, eta * 2.0)
    return j


def gn_estimate(
    params: ModelParams,
    grid: Grid,
    n_samples: int = 2000,
    seed: int = 0,
    scale_invariant: bool = False,
    ascent_iters: int = 300,
    n_starts: int = 4,
) -> GNEstimate:
    """Estimate the best GN constant from below, by sampling and by ascent.

    The plain inequality bounds ||u||_{alpha+2} by C ||u||_2^(1-theta)
    ||u||_{H^sigma}^theta with ||u||_{H^sigma}^2 = ||u||^2 + ||(-Delta)^(sigma/2)u||^2.
    The scale-invariant one (m = 1) bounds ||u||_{alpha+2}^{alpha+2}. The
    ascent starts from the best few samples.
    """
    if scale_invariant and params.m != 1:
        raise ValueError("the scale-invariant inequality is stated for m = 1")
    if params.alpha > params.sobolev_exponent:
        raise gs.RegimeError("alpha above the Sobolev exponent")
    rng = np.random.default_rng(seed)
    qf = fn.gn_scale_invariant_quotient if scale_invariant else fn.gn_quotient
    best: list = []
    for batch in fn.random_fields(grid, n_samples, rng):
        q = qf(fn.batch_norms(grid, batch, params), params)
        for i in np.argsort(q)[-n_starts:]:
            best.append((float(q[i]), batch[i]))
        best = sorted(best, key=lambda t: t[0])[-n_starts:]
    sampled = best[-1][0]
    opt = sampled
    for _, v in best:
        j = _ascend(v, grid, params, scale_invariant, ascent_iters)
        opt = max(opt, math.exp(j))
    return GNEstimate(max(sampled, opt), sampled, opt, seed, n_samples, scale_invariant)


def gn_constant(
    params: ModelParams, grid: Grid, mode: GNMode = GNMode.WEINSTEIN_OPTIM, n_samples: int = 2000, seed: int = 0
) -> float:
    est = gn_estimate(params, grid, n_samples=n_samples, seed=seed, ascent_iters=0 if mode is GNMode.SAMPLING else 300)
    return est.sampling if mode is GNMode.SAMPLING else est.value


def gn_violations(params: ModelParams, grid: Grid, constant: float, n: int, seed: int, scale_invariant: bool = False):
    """Number of fresh random fields whose quotient exceeds ``constant`` (and the largest quotient seen)."""
    rng = np.random.default_rng(seed)
    qf = fn.gn_scale_invariant_quotient if scale_invariant else fn.gn_quotient
    bad, worst = 0, 0.0
    for batch in fn.random_fields(grid, n, rng):
        q = qf(fn.batch_norms(grid, batch, params), params)
        bad += int(np.sum(q > constant))
        worst = max(worst, float(q.max()))
    return bad, worst


# --- localized normalized problem ----------------------------------------------------


@dataclass(frozen=True)
class LocalizedConstants:
    M0: float
    l: float
    M1: float
    k: float
    rho0: float
    c_max: float
    gn_constant: float
    a_residual: float = 0.0
    rho_residual: float = 0.0
    # rho0 itself underflows when l is close to 0
    log_rho0: float = 0.0


class RootError(RuntimeError):
    pass


def localized_exponents(params: ModelParams) -> tuple:
    """(l, k) of the localized problem."""
    s, a, d, m = params.sigma, params.alpha, params.d, params.m
    l = (4 * s - a * d) / (4 * s - (d - 2 * s) * a)
    k = ((d + m) * a - 4 * s) / (4 * s - a * (d + m - 2 * s))
    return l, k


def _log1pexp(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def _solve_log_a(log_rho: float, k: float, m1: float) -> float:
    """log a for the unique a > 0 with (a+1)^k a = M1 rho^-(k+1); Newton on log a, bisection fallback."""
    target = math.log(m1) - (k + 1) * log_rho
    f = lambda la: k * _log1pexp(la) + la - target
    df = lambda la: k * 0.5 * (1.0 + math.tanh(0.5 * la)) + 1.0
    la = target / (k + 1)
    for _ in range(100):
        step = f(la) / df(la)
        la -= step
        if abs(step) < 1e-15 * max(1.0, abs(la)):
            return la
    lo, hi = target - 50.0 * (1 + abs(target)), target + 50.0 * (1 + abs(target))
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)


def _solve_a(rho: float, k: float, m1: float) -> float:
    return math.exp(_solve_log_a(math.log(rho), k, m1))


def localized_constants(params: ModelParams, gn_c: float, u1_kinetic: float) -> LocalizedConstants:
    """Closed-form constants and the radius rho0 of the localized minimization.

    ``gn_c`` is the constant of the plain GN inequality for ||u||_{alpha+2};
    its (alpha+2)-th power is the constant in the bound on ||u||_{alpha+2}^{alpha+2}
    that enters M1. ``u1_kinetic`` is ||(-Delta_x)^(sigma/2) U_1||^2 for the
    unit-mass minimizer on R^d.
    """
    s, a, d, m = params.sigma, params.alpha, params.d, params.m
    lo, hi = params.mass_critical_exponent, min(4 * s / d, params.sobolev_exponent)
    l, k = localized_exponents(params)
    if not lo < a < hi:
        raise gs.RegimeError(f"alpha={a} outside ({lo:g}, {hi:g}); l={l:g}, k={k:g}")
    if not (gn_c > 0 and u1_kinetic > 0):
        raise ValueError("constants must be positive")
    den = 4 * s - (d - 2 * s) * a
    m0 = (2 * np.pi) ** (2 * s * a * m / den) * u1_kinetic ** (-l)
    cp = gn_c ** (a + 2.0)
    m1 = ((a + 2.0) / (2.0 * cp)) ** (4 * s / (4 * s - a * (d + m - 2 * s)))

    # a(rho) rho is decreasing and M0 rho^l increasing: one crossing. Near the
    # upper end of the alpha range l -> 0 and rho0 can leave the double range,
    # so the root and both residuals are computed for log rho.
    log_m0, log_m1 = math.log(m0), math.log(m1)
    g = lambda lr: _solve_log_a(lr, k, m1) + (1.0 - l) * lr - log_m0
    lo_r, hi_r = -1.0, 1.0
    while g(lo_r) < 0:
        lo_r *= 2.0
        if lo_r < -1e8:
            raise RootError("no lower bracket for rho0")
    while g(hi_r) > 0:
        hi_r *= 2.0
        if hi_r > 1e8:
            raise RootError("no upper bracket for rho0")
    lr = brentq(g, lo_r, hi_r, xtol=1e-15, rtol=1e-15, maxiter=500)
    la = _solve_log_a(lr, k, m1)
    a_res = abs(math.expm1(k * _log1pexp(la) + la - log_m1 + (k + 1) * lr))
    rho_res = abs(math.expm1(la + (1.0 - l) * lr - log_m0))
    if max(a_res, rho_res) > 1e-10:
        raise RootError(f"root residuals too large: a {a_res:g}, rho0 {rho_res:g}")
    return LocalizedConstants(m0, l, m1, k, math.exp(lr), math.exp(log_m0 + l * lr), gn_c, a_res, rho_res, lr)


def reference_u1_kinetic(params: ModelParams, grid: Grid, cfg: gs.SolverConfig = gs.SolverConfig()) -> float:
    """||(-Delta_x)^(sigma/2) U_1||^2 for the unit-mass ground state on R^d.

    U_1 is Q_omega at the frequency where its mass is 1; with Q_omega the
    rescaling of the computed Q_1, mass and kinetic energy are powers of omega.
    """
    ref = gs.solve_reference_rd(params, grid, cfg)
    s, a, d = params.sigma, params.alpha, params.d
    mass1 = fn.mass(ref.field)
    kin1 = fn.kinetic(ref.field, params.flat())
    q = 2.0 / a - d / (2.0 * s)
    omega = (1.0 / mass1) ** (1.0 / q)
    return omega ** (2.0 / a + 1.0 - d / (2.0 * s)) * kin1
