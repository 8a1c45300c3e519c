"""Brute-force references for the tests.

Each oracle takes a different route from the code it checks: dense DFT
matrices instead of FFTs, central differences instead of analytic
gradients, and a grid search instead of root bracketing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import Kind, ModelParams
from .spectral import Field, Grid, MultiplierDescriptor, Symbol

MAX_DENSE = 256


class OracleSizeError(ValueError):
    pass


def _pow0(b: float, p: float) -> float:
    return b**p if b > 0 else 0.0


def _symbol_at(desc: MultiplierDescriptor, xi2: float, k2: float) -> float:
    s = desc.sigma
    sym = desc.symbol
    if sym is Symbol.ISO_FRAC:
        return _pow0(xi2 + k2, s)
    if sym is Symbol.ANISO_FRAC:
        return _pow0(xi2, s) + _pow0(k2, s)
    if sym is Symbol.RESCALED_L:
        return _pow0(xi2 + desc.omega ** (-1.0 / s) * k2, s)
    if sym is Symbol.POHOZAEV_WEIGHT:
        return _pow0(xi2 + desc.lam * k2, s - 1.0) * xi2
    if sym is Symbol.PARTIAL_X:
        return _pow0(xi2, s)
    if sym is Symbol.PARTIAL_Y:
        return _pow0(k2, s)
    raise ValueError(sym)


def _dft(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def _freqs(n: int, scale: float) -> np.ndarray:
    return scale * np.array([j if j < n // 2 else j - n for j in range(n)], dtype=float)


@dataclass(frozen=True)
class DenseOperator:
    size: int
    matrix: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self.matrix @ values.reshape(-1)).reshape(values.shape)


def dense_operator(grid: Grid, descriptor: MultiplierDescriptor) -> DenseOperator:
    if grid.size > MAX_DENSE:
        raise OracleSizeError(f"dense oracle limited to {MAX_DENSE} points, grid has {grid.size}")
    axes = [(grid.nx, np.pi / grid.lx, True)] * grid.d + [(grid.ny, 1.0, False)] * grid.m
    f = np.ones((1, 1), dtype=complex)
    for n, _, _ in axes:
        f = np.kron(f, _dft(n))
    # symbol on the flattened (row-major) frequency lattice
    diag = np.empty(grid.size)
    for flat, idx in enumerate(np.ndindex(*grid.shape)):
        xi2 = k2 = 0.0
        for (n, sc, is_x), i in zip(axes, idx):
            w = _freqs(n, sc)[i] ** 2
            if is_x:
                xi2 += w
            else:
                k2 += w
        diag[flat] = _symbol_at(descriptor, xi2, k2)
    mat = f.conj().T @ (diag[:, None] * f)
    return DenseOperator(grid.size, mat)


def dense_apply(u: Field, descriptor: MultiplierDescriptor) -> Field:
    return Field(u.grid, dense_operator(u.grid, descriptor).apply(u.values))


def fd_gradient(functional: Callable[[Field], float], u: Field, h: float = 1e-4) -> Field:
    """L^2 gradient g with dF = Re int conj(g) du, by central differences.

    Each sample's real and imaginary parts are perturbed separately and the
    result is divided by the quadrature weight.
    """
    if not 1e-6 <= h <= 1e-3:
        raise ValueError(f"h must lie in [1e-6, 1e-3], got {h}")
    base = u.values
    flat = base.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for j in range(flat.size):
        parts = []
        for step in (h, 1j * h):
            vp = flat.copy()
            vm = flat.copy()
            vp[j] += step
            vm[j] -= step
            fp = functional(Field(u.grid, vp.reshape(base.shape)))
            fm = functional(Field(u.grid, vm.reshape(base.shape)))
            parts.append((fp - fm) / (2.0 * h))
        out[j] = parts[0] + 1j * parts[1]
    return Field(u.grid, out.reshape(base.shape) / u.grid.weight)


def gradient_cosine(a: Field, b: Field) -> float:
    """Real L^2 cosine between two gradients."""
    num = float(np.sum((np.conj(a.values) * b.values).real))
    return num / (np.linalg.norm(a.values) * np.linalg.norm(b.values))


def fiber_energy_curve(u: Field, params: ModelParams, t_grid: np.ndarray) -> np.ndarray:
    """E(u^t) for u^t = t^(d/2) u(t x, y), from dilated symbols evaluated directly."""
    g = u.grid
    pw = np.abs(u.hat) ** 2
    s, a = params.sigma, params.alpha
    p = float(np.sum(np.abs(u.values) ** (a + 2.0))) * g.weight
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        if params.kind is Kind.ANISOTROPIC:
            sym = (t * t * g.xi2) ** s + params.lam**s * g.k2**s
        else:
            sym = (t * t * g.xi2 + params.lam * g.k2) ** s
        out[i] = 0.5 * float(np.sum(sym * pw)) - t ** (a * g.d / 2.0) * p / (a + 2.0)
    return out


def fiber_grid_search(u: Field, params: ModelParams, t_grid: np.ndarray) -> float:
    """argmax over ``t_grid`` of E(u^t)."""
    t_grid = np.asarray(t_grid, dtype=float)
    return float(t_grid[int(np.argmax(fiber_energy_curve(u, params, t_grid)))])
