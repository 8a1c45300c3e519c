import math
from dataclasses import replace

import numpy as np
import pytest

from fnls import functionals as fn
from fnls import ground_state as gs
from fnls import thresholds as th
from fnls.params import Kind, ModelParams
from fnls.spectral import Field, Grid

CUBIC = ModelParams(d=1, m=1, sigma=1.0, alpha=2.0)
FLAT_INIT = gs.SolverConfig(init=gs.InitKind.GAUSSIAN_FLAT)
FRAC = ModelParams(d=1, m=1, sigma=0.75, alpha=2.0)


@pytest.fixture(scope="module")
def sech_state():
    g = Grid(d=1, m=1, lx=16.0, nx=256, ny=16)
    return g, gs.solve_fixed_frequency(CUBIC, 1.0, g, FLAT_INIT)


@pytest.fixture(scope="module")
def reference_q1():
    g = Grid(d=1, m=0, lx=32.0, nx=512)
    return gs.solve_reference_rd(CUBIC, g)


def test_sech_limit(sech_state):
    g, res = sech_state
    assert res.converged
    exact = Field(g, np.sqrt(2.0) / np.cosh(g.x(0)) + 0 * g.y(0) + 0j)
    # per unit torus length, so the comparison is with the profile on R
    assert (res.field - exact).l2() / math.sqrt(2 * math.pi) < 1e-4
    assert res.y_dependence == 0.0
    assert res.nehari_residual < 1e-8


def test_phase_normalized(sech_state):
    _, res = sech_state
    v = res.field.values
    j = np.argmax(np.abs(v))
    assert abs(v.flat[j].imag) < 1e-15 * abs(v.flat[j]) and v.flat[j].real > 0


def test_reference_profile(reference_q1):
    q = reference_q1
    assert q.converged
    assert fn.mass(q.field) == pytest.approx(4.0, abs=1e-3)
    assert q.nehari_residual < 1e-8
    assert q.field.grid.m == 0


@pytest.mark.parametrize("omega", [0.5, 2.0])
def test_rescaled_reference_solves_equation(reference_q1, omega):
    q = reference_q1
    q_om = gs.rescale_reference(q.field, CUBIC, omega)
    assert fn.equation_residual(q_om, omega, CUBIC.flat()) < 1e-5


@pytest.mark.parametrize("sigma", [1.0, 0.8])
def test_nu_scaling_exponent_fit(sigma):
    # in d = 2 the exponent with d/(2 sigma) differs from the one with 1/(2 sigma)
    p = ModelParams(d=2, m=1, sigma=sigma, alpha=1.0)
    g = Grid(d=2, m=0, lx=16.0, nx=128)
    omegas = np.array([0.5, 1.0, 2.0])
    nus = [gs.solve_reference_rd(p, g, omega=w).c_value for w in omegas]
    slope = np.polyfit(np.log(omegas), np.log(nus), 1)[0]
    assert slope == pytest.approx(gs.nu_scaling_exponent(p), abs=2e-3)
    assert abs(slope - ((p.alpha + 2) / p.alpha - 1 / (2 * p.sigma))) > 0.4


def test_semitrivial_at_small_frequency():
    g = Grid(d=1, m=1, lx=32.0, nx=256, ny=16)
    res = gs.solve_fixed_frequency(FRAC, 0.1, g)
    ref = gs.solve_reference_rd(FRAC, g, omega=0.1)
    assert res.converged and res.y_dependence < 1e-8
    assert res.c_value == pytest.approx(2 * math.pi * ref.c_value, rel=1e-8)


def test_y_dependent_at_large_frequency():
    g = Grid(d=1, m=1, lx=16.0, nx=512, ny=16)
    res = gs.solve_fixed_frequency(FRAC, 4.0, g)
    ref = gs.solve_reference_rd(FRAC, g, omega=4.0)
    assert res.converged and res.y_dependence > 1e-3
    assert res.c_value < 2 * math.pi * ref.c_value


@pytest.fixture(scope="module")
def cubic_ground_state():
    g = Grid(d=1, m=1, lx=16.0, nx=256, ny=32)
    return g, gs.solve_fixed_frequency(CUBIC, 1.0, g)


def test_weinstein_relation_and_minimality(cubic_ground_state):
    g, res = cubic_ground_state
    assert res.converged and res.y_dependence > 1e-3
    phi, a = res.field, CUBIC.alpha
    w = fn.weinstein(phi, 1.0, CUBIC)
    assert w ** ((a + 2) / a) == pytest.approx(2 * (a + 2) / a * res.c_value, rel=1e-6)
    rng = np.random.default_rng(7)
    for batch in fn.random_fields(g, 200, rng):
        for v in batch:
            assert fn.weinstein(Field(g, v), 1.0, CUBIC) >= w * (1 - 1e-9)


def test_pohozaev_vanishes_on_ground_states(cubic_ground_state):
    _, res = cubic_ground_state
    assert res.pohozaev_residual < 1e-6
    p = ModelParams(d=1, m=1, sigma=0.9, alpha=2.0)
    frac = gs.solve_fixed_frequency(p, 1.0, Grid(d=1, m=1, lx=64.0, nx=1024, ny=32))
    assert frac.converged and frac.pohozaev_residual < 1e-6


def test_flat_state_is_not_the_ground_state(sech_state, cubic_ground_state):
    assert cubic_ground_state[1].c_value < sech_state[1].c_value


def test_monotone_descent(sech_state):
    _, res = sech_state
    h = np.array(res.history)
    assert np.all(np.diff(h) <= 1e-13 * np.abs(h[1:]))


def test_gauge_invariance():
    g = Grid(d=1, m=1, lx=16.0, nx=256, ny=16)
    base = gs.initial_field(g, gs.SolverConfig())
    ref = gs.solve_fixed_frequency(FRAC, 2.0, g, u0=base)
    moved = Field(g, np.roll(base.values, 12, axis=0) * np.exp(0.7j))
    res = gs.solve_fixed_frequency(FRAC, 2.0, g, u0=moved)
    assert res.c_value == pytest.approx(ref.c_value, rel=1e-10)
    back = np.roll(res.field.values, -12, axis=0)
    assert np.max(np.abs(back - ref.field.values)) < 1e-6


def test_fixed_frequency_errors():
    g = Grid(d=1, m=1, nx=32, ny=8)
    with pytest.raises(ValueError):
        gs.solve_fixed_frequency(CUBIC, 0.0, g)
    with pytest.raises(gs.RegimeError):
        gs.solve_fixed_frequency(ModelParams(d=2, m=1, sigma=0.5, alpha=5.0), 1.0, Grid(d=2, m=1, nx=8, ny=8))
    with pytest.raises(ValueError):
        gs.solve_fixed_frequency(CUBIC, 1.0, g, u0=Field.zeros(g))


def test_non_convergence_is_reported():
    g = Grid(d=1, m=1, lx=16.0, nx=128, ny=8)
    res = gs.solve_fixed_frequency(CUBIC, 1.0, g, gs.SolverConfig(max_iter=1))
    assert not res.converged and res.iterations == 1


def test_omega_to_infinity_limit():
    g2 = Grid(d=2, m=0, lx=16.0, nx=256)
    q = gs.solve_fixed_frequency(ModelParams(d=2, m=0, sigma=1.0, alpha=2.0), 1.0, g2, FLAT_INIT).field

    def along_y(vals, ny, pts):
        c = np.fft.fft(vals, axis=1) / ny
        k = np.fft.fftfreq(ny, 1.0 / ny)
        ph = np.exp(1j * np.outer(pts, k))
        nyq = np.abs(k) == ny // 2
        ph[:, nyq] = np.cos(np.outer(pts, k[nyq]))
        return c @ ph.T

    dists = []
    for omega, ny in ((4.0, 64), (16.0, 128), (64.0, 256)):
        lam = 1.0 / omega
        g = Grid(d=1, m=1, lx=16.0, nx=256, ny=ny)
        res = gs.solve_fixed_frequency(replace(CUBIC, lam=lam), 1.0, g)
        assert res.converged
        z = g2.x1d
        win = np.abs(z) < math.pi / math.sqrt(lam)
        diff = along_y(res.field.values, ny, math.sqrt(lam) * z[win]) - q.values[:, win]
        dists.append(math.sqrt(float(np.sum(np.abs(diff) ** 2)) * g2.dx**2))
    assert dists[0] > dists[1] > dists[2]
    assert dists[-1] < 1e-4


# --- normalized problems -----------------------------------------------------------

SUB = ModelParams(d=1, m=1, sigma=1.0, alpha=1.0)
SUB_GRID = Grid(d=1, m=1, lx=32.0, nx=128, ny=16)


@pytest.fixture(scope="module")
def subcritical_series():
    cs = [1.0, 2.0, 4.0, 8.0, 16.0]
    return cs, [gs.solve_normalized_subcritical(SUB, c, SUB_GRID) for c in cs]


def test_subcritical_minimum_negative(subcritical_series):
    for res in subcritical_series[1]:
        assert res.converged
        assert res.c_value < 0 and res.omega > 0
        assert fn.mass(res.field) == pytest.approx(res.report.mass, rel=1e-12)


def test_subcritical_flat_competitor_bound(subcritical_series):
    cs, results = subcritical_series
    for c, res in zip(cs, results):
        flat = th.flat_normalized_reference(SUB, c, SUB_GRID, gs.SolverConfig())
        assert res.c_value <= flat * (1 - 1e-10)


def test_subcritical_energy_per_mass_decreasing(subcritical_series):
    cs, results = subcritical_series
    ratios = [r.c_value / c for c, r in zip(cs, results)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_subcritical_multiplier_vanishes_at_small_mass(subcritical_series):
    # omega_c -> 0 as c -> 0, and grows with c
    oms = [r.omega for r in subcritical_series[1]]
    assert all(b > a for a, b in zip(oms, oms[1:]))
    small = gs.solve_normalized_subcritical(SUB, 0.05, SUB_GRID)
    assert small.omega < oms[0]


def test_subcritical_monotone_descent(subcritical_series):
    for res in subcritical_series[1]:
        h = np.array(res.history)
        assert np.all(np.diff(h) <= 1e-13 * np.abs(h[1:]))


def test_subcritical_rejects_regime():
    with pytest.raises(gs.RegimeError):
        gs.solve_normalized_subcritical(ModelParams(d=1, m=1, sigma=1.0, alpha=3.0), 1.0, SUB_GRID)


LOC = ModelParams(d=1, m=1, sigma=1.0, alpha=2.2)


@pytest.fixture(scope="module")
def localized():
    c_gn = th.gn_constant(LOC, Grid(d=1, m=1, lx=16.0, nx=64, ny=16), seed=1)
    k1 = th.reference_u1_kinetic(LOC, Grid(d=1, m=0, lx=16.0, nx=128))
    return th.localized_constants(LOC, c_gn, k1)


def test_localized_minimizer_interior(localized):
    g = Grid(d=1, m=1, lx=64.0, nx=256, ny=16)
    c = 5.0
    assert c < localized.c_max
    res = gs.solve_normalized_localized(LOC, c, localized.rho0, g, gs.SolverConfig(width=8.0))
    assert res.converged
    assert res.c_value < 0
    assert res.report.kinetic < localized.rho0 - 0.1 * localized.rho0
    assert res.equation_residual < 1e-5


def test_localized_guard(localized):
    g = Grid(d=1, m=1, lx=64.0, nx=256, ny=16)
    with pytest.raises(gs.GuardError):
        gs.solve_normalized_localized(LOC, 60.0, localized.rho0, g, gs.SolverConfig(width=8.0))


def test_localized_regime():
    with pytest.raises(gs.RegimeError):
        gs.solve_normalized_localized(SUB, 1.0, 1.0, SUB_GRID)


# --- intercritical ---------------------------------------------------------------------

INTER = ModelParams(d=1, m=1, sigma=1.0, alpha=5.0, kind=Kind.ANISOTROPIC)
INTER_GRID = Grid(d=1, m=1, lx=48.0, nx=768, ny=32)
INTER_CFG = gs.SolverConfig(residual_tol=1e-7, max_iter=400)


@pytest.fixture(scope="module")
def intercritical_state():
    return gs.solve_intercritical(INTER, 12.0, INTER_GRID, INTER_CFG)


def test_intercritical_minimum(intercritical_state):
    res = intercritical_state
    assert res.converged
    assert res.c_value > 0
    assert res.report.mass == pytest.approx(12.0, rel=1e-12)
    assert abs(res.report.k_aniso) / (res.report.kinetic + res.report.mass) < 1e-8
    assert res.c_value == pytest.approx(0.5119057, rel=1e-6)


def test_intercritical_equals_inf_of_i(intercritical_state):
    # on K = 0 the functional I equals E; every field of the same mass with K <= 0 has I >= m_c
    res = intercritical_state
    assert fn.i_aniso(res.field, INTER) == pytest.approx(res.c_value, rel=1e-6)
    rng = np.random.default_rng(11)
    seen = 0
    for batch in fn.random_fields(INTER_GRID, 64, rng, batch=16):
        for v in batch:
            u = Field(INTER_GRID, v)
            u = u * math.sqrt(12.0 / fn.mass(u))
            if fn.k_aniso(u, INTER) <= 0:
                seen += 1
                assert fn.i_aniso(u, INTER) >= res.c_value * (1 - 1e-6)
    assert seen > 0


def test_intercritical_scaling_identity(intercritical_state):
    # v(x, y) = a u(b x, y) on the grid shrunk by b maps S(c) to S(1) for lambda = b^2
    p, c = INTER, 12.0
    l = p.alpha / (p.alpha * p.d - 4 * p.sigma)
    b = c**l
    a = b ** (2 * p.sigma / p.alpha)
    u = intercritical_state.field
    g1 = Grid(d=1, m=1, lx=INTER_GRID.lx / b, nx=INTER_GRID.nx, ny=INTER_GRID.ny)
    v = Field(g1, a * u.values)
    p1 = replace(p, lam=c ** (2 * l))
    expo = (2 * p.sigma * (p.alpha + 2) - p.alpha * p.d) / (p.alpha * p.d - 4 * p.sigma)
    assert fn.mass(v) == pytest.approx(1.0, rel=1e-12)
    assert fn.energy(v, p1) == pytest.approx(c**expo * fn.energy(u, p), rel=1e-10)
    assert abs(fn.k_aniso(v, p1)) < 1e-8 * fn.kinetic(v, p1)


def test_intercritical_flat_at_large_mass():
    p = ModelParams(d=1, m=1, sigma=1.0, alpha=8.0, kind=Kind.ANISOTROPIC)
    g = Grid(d=1, m=1, lx=48.0, nx=512, ny=16)
    cfg = gs.SolverConfig(residual_tol=1e-7, max_iter=1500)
    res = gs.solve_intercritical(p, 32.0, g, cfg)
    flat = th.flat_normalized_reference(p, 32.0, g, cfg)
    assert res.y_dependence < 1e-12
    assert res.c_value == pytest.approx(flat, rel=1e-4)


@pytest.mark.parametrize(
    "params",
    [
        ModelParams(d=1, m=1, sigma=0.4, alpha=6.0, kind=Kind.ANISOTROPIC),
        ModelParams(d=1, m=1, sigma=1.0, alpha=3.0, kind=Kind.ANISOTROPIC),
        ModelParams(d=1, m=1, sigma=0.9, alpha=3.0),
        ModelParams(d=2, m=1, sigma=1.0, alpha=1.5),
    ],
)
def test_intercritical_regime_checks(params):
    with pytest.raises(gs.RegimeError):
        gs.solve_intercritical(params, 1.0, Grid(d=params.d, m=1, nx=16, ny=8))
