"""Grids, unitary transforms and fractional Fourier multipliers.

The x-directions of R^d are truncated to the periodic box [-lx, lx)^d and the
torus directions have period 2 pi. Spectral coefficients are normalized so
that the plain sum of |u_hat|^2 over the lattice equals the quadrature-weighted
L^2 norm of the samples.
"""

from __future__ import annotations

import enum
import functools
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .params import Kind, ModelParams


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("FNLS_THREADS", "1")))
    except ValueError:
        return 1


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    d: int
    m: int
    lx: float = 16.0
    nx: int = 128
    ny: int = 16

    def __post_init__(self):
        if self.d < 1 or self.m < 0:
            raise ValueError("need d >= 1 and m >= 0")
        if self.nx < 2 or self.nx % 2:
            raise ValueError(f"nx must be even, got {self.nx}")
        if self.m and (self.ny < 2 or self.ny % 2):
            raise ValueError(f"ny must be even, got {self.ny}")
        if not self.lx > 0:
            raise ValueError("lx must be positive")

    @property
    def shape(self) -> tuple:
        return (self.nx,) * self.d + (self.ny,) * self.m

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dx(self) -> float:
        return 2.0 * self.lx / self.nx

    @property
    def dy(self) -> float:
        return 2.0 * np.pi / self.ny

    @property
    def weight(self) -> float:
        return self.dx**self.d * self.dy**self.m

    @property
    def volume(self) -> float:
        return (2.0 * self.lx) ** self.d * (2.0 * np.pi) ** self.m

    def with_x(self, *, lx: Optional[float] = None, nx: Optional[int] = None) -> "Grid":
        return Grid(self.d, self.m, self.lx if lx is None else lx, self.nx if nx is None else nx, self.ny)

    def flat(self) -> "Grid":
        """Same x-sampling without torus directions."""
        return Grid(self.d, 0, self.lx, self.nx, self.ny)

    def _bcast(self, arr, axis):
        shp = [1] * (self.d + self.m)
        shp[axis] = arr.size
        return arr.reshape(shp)

    @functools.cached_property
    def x1d(self) -> np.ndarray:
        return -self.lx + self.dx * np.arange(self.nx)

    @functools.cached_property
    def y1d(self) -> np.ndarray:
        return self.dy * np.arange(self.ny)

    @functools.cached_property
    def xi1d(self) -> np.ndarray:
        """x-frequencies in FFT order, (pi/lx) * {-nx/2, ..., nx/2-1}."""
        return (np.pi / self.lx) * np.fft.fftfreq(self.nx, 1.0 / self.nx)

    @functools.cached_property
    def k1d(self) -> np.ndarray:
        return np.fft.fftfreq(self.ny, 1.0 / self.ny)

    def x(self, j: int) -> np.ndarray:
        return self._bcast(self.x1d, j)

    def y(self, j: int) -> np.ndarray:
        return self._bcast(self.y1d, self.d + j)

    def xi(self, j: int) -> np.ndarray:
        return self._bcast(self.xi1d, j)

    def k(self, j: int) -> np.ndarray:
        return self._bcast(self.k1d, self.d + j)

    @functools.cached_property
    def r2(self) -> np.ndarray:
        """|x|^2 on the grid."""
        return sum(self.x(j) ** 2 for j in range(self.d)) + np.zeros(self.shape)

    @functools.cached_property
    def xi2(self) -> np.ndarray:
        return sum(self.xi(j) ** 2 for j in range(self.d)) + np.zeros(self.shape)

    @functools.cached_property
    def k2(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for j in range(self.m):
            out = out + self.k(j) ** 2
        return out

    @functools.cached_property
    def norm(self) -> float:
        return math.sqrt(self.weight / self.size)

    @functools.cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps modes with |index| <= n/3 along every axis."""
        mask = np.ones(self.shape, dtype=bool)
        for ax, n in enumerate(self.shape):
            idx = np.abs(np.fft.fftfreq(n, 1.0 / n))
            mask &= self._bcast(idx <= n / 3.0, ax)
        return mask

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.fftn(values, workers=_workers()) * self.norm

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return sfft.ifftn(coeffs, workers=_workers()) / self.norm

    def dealias(self, values: np.ndarray) -> np.ndarray:
        return self.inverse(self.forward(values) * self.dealias_mask)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values).real * self.weight)


@dataclass
class Field:
    """Complex samples on a grid, row-major with x-axes first."""

    grid: Grid
    values: np.ndarray
    _hat: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite samples")

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_spectral(cls, grid: Grid, coeffs: np.ndarray) -> "Field":
        f = cls(grid, grid.inverse(coeffs))
        f._hat = np.asarray(coeffs, dtype=complex)
        return f

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = self.grid.forward(self.values)
        return self._hat

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _check_grid(self.grid, other.grid)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_grid(self.grid, other.grid)
        return Field(self.grid, self.values - other.values)

    def inner(self, other: "Field") -> complex:
        """<self, other> = integral of self * conj(other)."""
        _check_grid(self.grid, other.grid)
        return complex(np.vdot(other.values, self.values) * self.grid.weight)

    def l2(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.grid.weight)


def _check_grid(a: Grid, b: Grid):
    if a != b:
        raise GridMismatch(f"grid mismatch: {a} vs {b}")


class Symbol(enum.Enum):
    ISO_FRAC = "iso"
    ANISO_FRAC = "aniso"
    RESCALED_L = "rescaled"
    POHOZAEV_WEIGHT = "pohozaev"
    PARTIAL_X = "partial-x"
    PARTIAL_Y = "partial-y"


@dataclass(frozen=True)
class MultiplierDescriptor:
    """Which multiplier to build.

    ``omega`` is only read by RESCALED_L, whose torus weight is
    omega^(-1/sigma); the Pohozaev weight accepts ``lam`` for the
    torus-stiffened operator ``-Delta_x - lam d_y^2``.
    """

    symbol: Symbol
    sigma: float
    omega: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.symbol is Symbol.RESCALED_L and not self.omega > 0.0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")


@dataclass(frozen=True, eq=False)
class Multiplier:
    grid: Grid
    descriptor: MultiplierDescriptor
    values: np.ndarray


def _power(base: np.ndarray, p: float) -> np.ndarray:
    """base**p with 0**p := 0, also for negative p."""
    out = np.zeros_like(base)
    pos = base > 0
    out[pos] = base[pos] ** p
    return out


@functools.lru_cache(maxsize=128)
def _symbol_values(grid: Grid, desc: MultiplierDescriptor) -> np.ndarray:
    s = desc.sigma
    xi2, k2 = grid.xi2, grid.k2
    sym = desc.symbol
    if sym is Symbol.ISO_FRAC:
        vals = _power(xi2 + k2, s)
    elif sym is Symbol.ANISO_FRAC:
        vals = _power(xi2, s) + _power(k2, s)
    elif sym is Symbol.RESCALED_L:
        vals = _power(xi2 + desc.omega ** (-1.0 / s) * k2, s)
    elif sym is Symbol.POHOZAEV_WEIGHT:
        vals = _power(xi2 + desc.lam * k2, s - 1.0) * xi2
    elif sym is Symbol.PARTIAL_X:
        vals = _power(xi2, s)
    elif sym is Symbol.PARTIAL_Y:
        vals = _power(k2, s)
    else:  # pragma: no cover
        raise ValueError(sym)
    vals.setflags(write=False)
    return vals


def build_multiplier(grid: Grid, descriptor: MultiplierDescriptor) -> Multiplier:
    return Multiplier(grid, descriptor, _symbol_values(grid, descriptor))


def kinetic_descriptor(params: ModelParams) -> MultiplierDescriptor:
    """Multiplier of the model's kinetic operator, honoring ``params.lam``."""
    if params.kind is Kind.ISOTROPIC:
        if params.lam == 1.0:
            return MultiplierDescriptor(Symbol.ISO_FRAC, params.sigma)
        return MultiplierDescriptor(Symbol.RESCALED_L, params.sigma, omega=params.lam ** (-params.sigma))
    return MultiplierDescriptor(Symbol.ANISO_FRAC, params.sigma)


def kinetic_symbol(grid: Grid, params: ModelParams) -> np.ndarray:
    vals = build_multiplier(grid, kinetic_descriptor(params)).values
    if params.kind is Kind.ANISOTROPIC and params.lam != 1.0:
        vals = _power(grid.xi2, params.sigma) + params.lam**params.sigma * _power(grid.k2, params.sigma)
    return vals


def apply_multiplier(u: Field, mult: Multiplier) -> Field:
    _check_grid(u.grid, mult.grid)
    return Field.from_spectral(u.grid, u.hat * mult.values)


def quadratic_form(u: Field, mult: Multiplier) -> float:
    _check_grid(u.grid, mult.grid)
    return float(np.sum(mult.values * np.abs(u.hat) ** 2))


def balakrishnan_kinetic(u: Field, sigma: float, n_quad: int = 512) -> float:
    """sigma * ||(-Delta_x)^(sigma/2) u||^2 through the resolvent integral.

    Integrates m^sigma ||grad_x u_m||^2 over m in (0, inf) with
    u_m = sqrt(sin(pi sigma)/pi) (m - Delta_x)^(-1) u, after substituting
    m = e^s. The s-window is widened beyond the lattice's frequency range by
    a margin that makes both exponential tails of the integrand fall below
    ~1e-16.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie strictly in (0, 1), got {sigma}")
    if n_quad < 16:
        raise ValueError("n_quad must be at least 16")
    grid = u.grid
    xi2 = grid.xi2
    power = np.abs(u.hat) ** 2
    nz = xi2 > 0
    if not np.any(power[nz] > 0):
        return 0.0
    a = xi2[nz]
    p = power[nz]
    # integrand ~ e^{(1+sigma)s}/a at -inf and ~ e^{(sigma-1)s} at +inf
    s_lo = math.log(a.min()) - 37.0 / (1.0 + sigma)
    s_hi = math.log(a.max()) + 37.0 / (1.0 - sigma)
    s = np.linspace(s_lo, s_hi, n_quad)
    h = s[1] - s[0]
    w = np.full(n_quad, h)
    w[0] = w[-1] = h / 2
    pref = math.sin(math.pi * sigma) / math.pi
    log_a = np.log(a)
    weight = p * a**sigma
    total = 0.0
    for sj, wj in zip(s, w):
        # m^(sigma+1) a / (m + a)^2 with m = e^s, evaluated in log form
        t = sj - log_a
        total += wj * float(np.sum(weight * np.exp((sigma + 1.0) * t - 2.0 * np.logaddexp(0.0, t))))
    return pref * total
