"""Scalar functionals, the mass-preserving fiber scaling and the virial action."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import scipy.fft as sfft
from scipy.optimize import brentq

from .params import Kind, ModelParams
from .spectral import (
    Field,
    Grid,
    MultiplierDescriptor,
    Symbol,
    _power,
    build_multiplier,
    kinetic_symbol,
)


@dataclass(frozen=True)
class FunctionalReport:
    mass: float
    energy: float
    action: float
    nehari: float
    pohozaev: float
    k_aniso: float
    i_aniso: float
    y_kinetic: float
    lp_norm: float
    kinetic: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def mass(u: Field) -> float:
    return float(np.sum(np.abs(u.values) ** 2)) * u.grid.weight


def lp_norm(u: Field, alpha: float) -> float:
    """||u||_{alpha+2}^{alpha+2}."""
    return float(np.sum(np.abs(u.values) ** (alpha + 2.0))) * u.grid.weight


def _spec_sum(u: Field, symbol: np.ndarray) -> float:
    return float(np.sum(symbol * np.abs(u.hat) ** 2))


def kinetic(u: Field, params: ModelParams) -> float:
    """||L^(1/2) u||^2 for the model's kinetic operator L."""
    return _spec_sum(u, kinetic_symbol(u.grid, params))


def x_kinetic(u: Field, sigma: float) -> float:
    return _spec_sum(u, build_multiplier(u.grid, MultiplierDescriptor(Symbol.PARTIAL_X, sigma)).values)


def y_kinetic(u: Field, sigma: float) -> float:
    if u.grid.m == 0:
        return 0.0
    return _spec_sum(u, build_multiplier(u.grid, MultiplierDescriptor(Symbol.PARTIAL_Y, sigma)).values)


def energy(u: Field, params: ModelParams) -> float:
    return 0.5 * kinetic(u, params) - lp_norm(u, params.alpha) / (params.alpha + 2.0)


def action_nehari(u: Field, omega: float, params: ModelParams) -> tuple:
    """Action A, Nehari functional B = <A'(u), u> and I = A - B/(alpha+2)."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    kin = kinetic(u, params)
    mss = mass(u)
    lp = lp_norm(u, params.alpha)
    a2 = params.alpha + 2.0
    act = 0.5 * kin + 0.5 * omega * mss - lp / a2
    neh = kin + omega * mss - lp
    return act, neh, act - neh / a2


def weinstein(u: Field, omega: float, params: ModelParams) -> float:
    lp = lp_norm(u, params.alpha)
    if lp == 0.0:
        raise ValueError("Weinstein quotient undefined for the zero field")
    return (kinetic(u, params) + omega * mass(u)) / lp ** (2.0 / (params.alpha + 2.0))


def _potential_coeff(params: ModelParams) -> float:
    return params.alpha * params.d / (2.0 * (params.alpha + 2.0))


def pohozaev_weight(grid: Grid, params: ModelParams) -> np.ndarray:
    return build_multiplier(
        grid, MultiplierDescriptor(Symbol.POHOZAEV_WEIGHT, params.sigma, lam=params.lam)
    ).values


def pohozaev_q(u: Field, params: ModelParams) -> float:
    """Pohozaev functional; equals the anisotropic K for the anisotropic kind."""
    if params.kind is Kind.ANISOTROPIC:
        return k_aniso(u, params)
    return params.sigma * _spec_sum(u, pohozaev_weight(u.grid, params)) - _potential_coeff(params) * lp_norm(
        u, params.alpha
    )


def k_aniso(u: Field, params: ModelParams) -> float:
    return params.sigma * x_kinetic(u, params.sigma) - _potential_coeff(params) * lp_norm(u, params.alpha)


def i_aniso(u: Field, params: ModelParams) -> float:
    s, a = params.sigma, params.alpha
    return 0.5 * y_kinetic(u, s) + (a * params.d / (4.0 * s) - 1.0) * lp_norm(u, a) / (a + 2.0)


def report(u: Field, params: ModelParams, omega: float = 1.0) -> FunctionalReport:
    kin = kinetic(u, params)
    mss = mass(u)
    lp = lp_norm(u, params.alpha)
    a2 = params.alpha + 2.0
    return FunctionalReport(
        mass=mss,
        energy=0.5 * kin - lp / a2,
        action=0.5 * kin + 0.5 * omega * mss - lp / a2,
        nehari=kin + omega * mss - lp,
        pohozaev=pohozaev_q(u, params),
        k_aniso=k_aniso(u, params),
        i_aniso=i_aniso(u, params),
        y_kinetic=y_kinetic(u, params.sigma),
        lp_norm=lp,
        kinetic=kin,
    )


def equation_residual(u: Field, omega: float, params: ModelParams) -> float:
    """||L u + omega u - |u|^alpha u|| / ||u||."""
    lu = u.grid.inverse(kinetic_symbol(u.grid, params) * u.hat)
    res = lu + omega * u.values - np.abs(u.values) ** params.alpha * u.values
    return math.sqrt(float(np.sum(np.abs(res) ** 2)) / float(np.sum(np.abs(u.values) ** 2)))


# --- fiber scaling u^t(x, y) = t^(d/2) u(t x, y) ---------------------------


class FiberProfile:
    """E(u^t) and Q(u^t) as exact functions of t for a frozen spectrum.

    Uses |hat{u^t}(xi,k)|^2 = t^-d |hat u(xi/t, k)|^2 and
    ||u^t||_p^p = t^(alpha d / 2) ||u||_p^p, so no resampling is needed.
    """

    def __init__(self, u: Field, params: ModelParams):
        self.params = params
        g = u.grid
        pw = np.abs(u.hat) ** 2
        keep = pw > 0
        self._xi2 = g.xi2[keep]
        self._k2 = params.lam * g.k2[keep]
        self._pw = pw[keep]
        self.lp = lp_norm(u, params.alpha)
        s = params.sigma
        if params.kind is Kind.ANISOTROPIC:
            self._kx = float(np.sum(_power(self._xi2, s) * self._pw))
            self._ky = float(np.sum(_power(self._k2, s) * self._pw))
        self._pot_exp = params.alpha * params.d / 2.0

    def kinetic(self, t: float) -> float:
        s = self.params.sigma
        if self.params.kind is Kind.ANISOTROPIC:
            return t ** (2 * s) * self._kx + self._ky
        return float(np.sum(_power(t * t * self._xi2 + self._k2, s) * self._pw))

    def energy(self, t: float) -> float:
        a2 = self.params.alpha + 2.0
        return 0.5 * self.kinetic(t) - t**self._pot_exp * self.lp / a2

    def pohozaev(self, t: float) -> float:
        s = self.params.sigma
        if self.params.kind is Kind.ANISOTROPIC:
            kin = s * t ** (2 * s) * self._kx
        else:
            q = t * t * self._xi2
            kin = s * float(np.sum(_power(q + self._k2, s - 1.0) * q * self._pw))
        return kin - _potential_coeff(self.params) * t**self._pot_exp * self.lp

    def kinetic_scale(self) -> float:
        return self.kinetic(1.0) + self.lp


class BandLimitError(ValueError):
    pass


def effective_bandwidth(u: Field, rel: float = 1e-13) -> float:
    """Largest |xi| (any x-axis) carrying spectral amplitude above rel * max."""
    amp = np.abs(u.hat)
    thresh = rel * amp.max()
    g = u.grid
    bw = 0.0
    for j in range(g.d):
        axes = tuple(a for a in range(g.d + g.m) if a != j)
        prof = amp.max(axis=axes) if axes else amp
        sig = np.abs(g.xi1d)[prof > thresh]
        if sig.size:
            bw = max(bw, float(sig.max()))
    return bw


def _interp_matrix(grid: Grid, t: float) -> np.ndarray:
    """Trigonometric interpolation from samples x_j to points t x_j."""
    n = grid.nx
    idx = np.fft.fftfreq(n, 1.0 / n)
    xi = (np.pi / grid.lx) * idx
    pts = t * grid.x1d + grid.lx
    ph = np.exp(1j * np.outer(pts, xi))
    nyq = np.abs(idx) == n // 2
    ph[:, nyq] = np.cos(np.outer(pts, xi[nyq]))
    dft = np.exp(-1j * np.outer(xi, grid.x1d + grid.lx))
    mat = (ph @ dft) / n
    # points pushed out of the box would pick up a periodic image of the
    # field; the field is taken to vanish there instead
    mat[np.abs(t * grid.x1d) > grid.lx] = 0.0
    return mat


def scale_fiber(u: Field, t: float, check_band: bool = True) -> Field:
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    g = u.grid
    if t == 1.0:
        return Field(g, u.values.copy())
    if check_band and u.l2() > 0:
        bw = effective_bandwidth(u)
        if t * bw > np.pi * g.nx / (2.0 * g.lx):
            raise BandLimitError(f"t={t:g} pushes bandwidth {bw:g} past the grid Nyquist frequency")
    mat = _interp_matrix(g, t)
    vals = u.values
    for ax in range(g.d):
        vals = np.moveaxis(np.tensordot(mat, np.moveaxis(vals, ax, 0), axes=(1, 0)), 0, ax)
    return Field(g, t ** (g.d / 2.0) * vals)


class FiberBracketError(RuntimeError):
    pass


def fiber_critical_t(u: Field, params: ModelParams, bracket=(1e-3, 1e3), tol: float = 1e-10) -> float:
    """t* > 0 where t -> Q(u^t) changes sign from positive to negative."""
    if mass(u) == 0.0:
        raise ValueError("fiber map undefined for the zero field")
    prof = FiberProfile(u, params)
    lo, hi = bracket
    for _ in range(4):
        if prof.pohozaev(lo) > 0 and prof.pohozaev(hi) < 0:
            break
        lo, hi = lo * 1e-3, hi * 1e3
    else:
        raise FiberBracketError("Q(u^t) does not change sign on the fiber; input degenerate or under-resolved")
    f = lambda s: prof.pohozaev(math.exp(s))
    s_star = brentq(f, math.log(lo), math.log(hi), xtol=1e-15, rtol=1e-15, maxiter=500)
    t_star = math.exp(s_star)
    if abs(prof.pohozaev(t_star)) > tol * prof.kinetic_scale() * max(1.0, t_star**prof._pot_exp):
        raise FiberBracketError("bisection did not reach the requested tolerance")
    return t_star


# --- virial action ----------------------------------------------------------

# quintic on [1, 2] joining rho^2 (C^2) to 0 (C^2)
_BLEND = np.linalg.solve(
    np.array(
        [
            [1, 1, 1, 1, 1, 1],
            [0, 1, 2, 3, 4, 5],
            [0, 0, 2, 6, 12, 20],
            [1, 2, 4, 8, 16, 32],
            [0, 1, 4, 12, 32, 80],
            [0, 0, 2, 12, 48, 160],
        ],
        dtype=float,
    ),
    np.array([1.0, 2.0, 2.0, 0.0, 0.0, 0.0]),
)


def cutoff_profile(rho: np.ndarray) -> np.ndarray:
    """Radial profile of chi: rho^2 on [0,1], quintic blend, 0 beyond 2."""
    rho = np.asarray(rho, dtype=float)
    blend = np.polynomial.polynomial.polyval(rho, _BLEND)
    return np.where(rho <= 1.0, rho**2, np.where(rho >= 2.0, 0.0, blend))


def cutoff_profile_derivative(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    dblend = np.polynomial.polynomial.polyval(rho, np.polynomial.polynomial.polyder(_BLEND))
    return np.where(rho <= 1.0, 2.0 * rho, np.where(rho >= 2.0, 0.0, dblend))


def cutoff_gradient(grid: Grid, R: float) -> list:
    """Components of R * (grad chi)(x / R)."""
    r = np.sqrt(grid.r2)
    rho = r / R
    dphi = cutoff_profile_derivative(rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(r > 0, R * dphi / np.where(r > 0, r, 1.0), 2.0)
    return [radial * grid.x(j) for j in range(grid.d)]


def x_gradient(u: Field) -> list:
    g = u.grid
    out = []
    for j in range(g.d):
        xi = g.xi(j).copy()
        xi[np.abs(g.xi1d).reshape(xi.shape) == np.pi * g.nx / (2 * g.lx)] = 0.0
        out.append(g.inverse(1j * xi * u.hat))
    return out


def virial_action(u: Field, R: float) -> float:
    """z_R = 2 Im int R grad chi(x/R) . grad_x u conj(u)."""
    g = u.grid
    if not R > 0:
        raise ValueError("R must be positive")
    if 2.0 * R > g.lx:
        raise ValueError(f"cutoff support 2R={2 * R:g} leaves the box of half-length {g.lx:g}")
    weights = cutoff_gradient(g, R)
    grads = x_gradient(u)
    integrand = sum(w * gu for w, gu in zip(weights, grads)) * np.conj(u.values)
    return 2.0 * float(np.sum(integrand.imag)) * g.weight


# --- random test fields -----------------------------------------------------


def random_fields(grid: Grid, n: int, rng: np.random.Generator, batch: int = 256) -> Iterator[np.ndarray]:
    """Batches of smooth localized random fields, shape (b, *grid.shape).

    Each sample is a Gaussian bump in x of random width and center. Its
    y-profile either has Fourier coefficients with Gaussian decay of random
    scale (y-flat and y-oscillatory fields) or is a single periodic bump of
    random width (y-concentrated fields).
    """
    done = 0
    shape = grid.shape
    kmax = np.pi * grid.nx / (2 * grid.lx)
    while done < n:
        b = min(batch, n - done)
        vals = np.ones((b,) + shape, dtype=complex)
        width = np.exp(rng.uniform(np.log(3.0 / kmax), np.log(grid.lx / 4), size=b))
        for j in range(grid.d):
            c = rng.uniform(-grid.lx / 8, grid.lx / 8, size=b)
            xj = grid.x1d[None, :] - c[:, None]
            prof = np.exp(-0.5 * (xj / width[:, None]) ** 2)
            prof = prof * (1 + 0.3 * rng.standard_normal((b, 1)) * np.cos(xj / width[:, None]))
            shp = [b] + [1] * len(shape)
            shp[1 + j] = grid.nx
            vals = vals * prof.reshape(shp)
        for j in range(grid.m):
            scale = np.exp(rng.uniform(np.log(0.05), np.log(grid.ny / 6), size=b))
            kk = grid.k1d[None, :]
            coef = (rng.standard_normal((b, grid.ny)) + 1j * rng.standard_normal((b, grid.ny))) * np.exp(
                -0.5 * (kk / scale[:, None]) ** 2
            )
            coef[:, 0] += 2.0 * rng.uniform(0, 1, size=b)
            prof = np.fft.ifft(coef, axis=1) * grid.ny
            # half of the samples get a single periodic bump in y instead
            bump = rng.uniform(size=b) < 0.5
            yw = np.exp(rng.uniform(np.log(3.0 / grid.ny), np.log(2.0), size=b))
            yc = rng.uniform(0, 2 * np.pi, size=b)
            yb = np.exp((np.cos(grid.y1d[None, :] - yc[:, None]) - 1.0) / yw[:, None] ** 2)
            prof = np.where(bump[:, None], yb, prof)
            shp = [b] + [1] * len(shape)
            shp[1 + grid.d + j] = grid.ny
            vals = vals * prof.reshape(shp)
        amp = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=b))
        vals *= amp.reshape((b,) + (1,) * len(shape))
        done += b
        yield vals


def _batch_spectra(grid: Grid, vals: np.ndarray) -> np.ndarray:
    axes = tuple(range(1, vals.ndim))
    return np.abs(sfft.fftn(vals, axes=axes) * grid.norm) ** 2


def batch_norms(grid: Grid, vals: np.ndarray, params: ModelParams) -> dict:
    """Mass, kinetic pieces and ||u||_{alpha+2}^{alpha+2} for a batch of fields."""
    pw = _batch_spectra(grid, vals)
    axes = tuple(range(1, vals.ndim))
    s = params.sigma
    mass_ = pw.sum(axis=axes)
    out = {
        "mass": mass_,
        # ||u||_{H^sigma}^2 = ||u||^2 + ||(-Delta)^(sigma/2) u||^2
        "h_sigma": mass_ + (_power(grid.xi2 + grid.k2, s)[None] * pw).sum(axis=axes),
        "kx": (_power(grid.xi2, s)[None] * pw).sum(axis=axes),
        "ky": (_power(grid.k2, s)[None] * pw).sum(axis=axes),
        "lp": (np.abs(vals) ** (params.alpha + 2.0)).sum(axis=axes) * grid.weight,
    }
    return out


def gn_exponent(params: ModelParams) -> float:
    return params.alpha * params.dim / (2.0 * params.sigma * (params.alpha + 2.0))


def gn_quotient(norms: dict, params: ModelParams) -> np.ndarray:
    """||u||_{a+2} / (||u||_2^(1-theta) ||u||_{H^sigma}^theta)."""
    th = gn_exponent(params)
    num = norms["lp"] ** (1.0 / (params.alpha + 2.0))
    return num / (norms["mass"] ** ((1 - th) / 2) * norms["h_sigma"] ** (th / 2))


def gn_scale_invariant_quotient(norms: dict, params: ModelParams) -> np.ndarray:
    """Ratio of both sides of the scale-invariant waveguide GN inequality (m = 1)."""
    a, s, d = params.alpha, params.sigma, params.d
    m_ = norms["mass"]
    den = (
        norms["kx"] ** (a * d / (4 * s))
        * m_ ** ((4 * s - a * (d + 1 - 2 * s)) / (4 * s))
        * (m_ ** (a / (4 * s)) + norms["ky"] ** (a / (4 * s)))
    )
    return norms["lp"] / den


def field_norms(u: Field, params: ModelParams) -> dict:
    return {k: float(v[0]) for k, v in batch_norms(u.grid, u.values[None], params).items()}


def gaussian(grid: Grid, width: float = 1.0, amplitude: float = 1.0, center: Optional[np.ndarray] = None) -> Field:
    r2 = grid.r2 if center is None else sum((grid.x(j) - center[j]) ** 2 for j in range(grid.d))
    return Field(grid, amplitude * np.exp(-0.5 * r2 / width**2) + np.zeros(grid.shape))
