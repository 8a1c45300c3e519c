"""Command-line driver: ``fnls {groundstate,scan,evolve,gn,check} --config PATH``.

Exit codes: 0 success, 1 configuration or input error, 2 non-converged
solve (groundstate) or a blow-up verdict under --expect-scatter (evolve),
3 failed oracle or inequality check.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dynamics as dy
from . import functionals as fn
from . import ground_state as gs
from . import oracle
from . import thresholds as th
from .io import ConfigError, RunConfig, SnapshotError, load_config, read_snapshot, with_overrides, write_report, write_snapshot
from .params import Kind
from .spectral import Field, Grid, MultiplierDescriptor, Symbol, apply_multiplier, build_multiplier

log = logging.getLogger("fnls")

EXIT_OK, EXIT_CONFIG, EXIT_RUN, EXIT_CHECK = 0, 1, 2, 3


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- groundstate ------------------------------------------------------------------


def _localized_rho0(cfg: RunConfig) -> float:
    p = cfg.model
    c_gn = th.gn_constant(p, cfg.grid, seed=cfg.seed)
    k1 = th.reference_u1_kinetic(p, cfg.grid.flat(), cfg.solver)
    lc = th.localized_constants(p, c_gn, k1)
    log.info("localized constants: rho0=%r c_max=%r", lc.rho0, lc.c_max)
    return lc.rho0


def cmd_groundstate(cfg: RunConfig) -> int:
    p, g, sc = cfg.model, cfg.grid, cfg.solver
    mode = cfg.option("mode")
    if mode == "fixed-frequency":
        res = gs.solve_fixed_frequency(p, cfg.require("omega"), g, sc)
    elif mode == "reference-rd":
        res = gs.solve_reference_rd(p, g, sc, omega=cfg.option("omega", 1.0))
    elif mode == "normalized-sub":
        res = gs.solve_normalized_subcritical(p, cfg.require("mass"), g, sc)
    elif mode == "normalized-local":
        rho0 = cfg.option("rho0")
        res = gs.solve_normalized_localized(p, cfg.require("mass"), rho0 if rho0 else _localized_rho0(cfg), g, sc)
    else:
        res = gs.solve_intercritical(p, cfg.require("mass"), g, sc)
    out = _out_dir(cfg)
    snap_params = p.flat() if mode == "reference-rd" else p
    write_snapshot(out / "field.fnls", res.field, snap_params)
    items = {
        "mode": mode,
        "converged": res.converged,
        "iterations": res.iterations,
        "omega": res.omega,
        "c_value": res.c_value,
        "nehari_residual": res.nehari_residual,
        "pohozaev_residual": res.pohozaev_residual,
        "equation_residual": res.equation_residual,
        "y_dependence": res.y_dependence,
    }
    items.update(res.report.as_dict())
    write_report(out / "report.txt", items)
    print(f"converged = {str(res.converged).lower()}  c_value = {res.c_value!r}")
    return EXIT_OK if res.converged else EXIT_RUN


# --- scan ---------------------------------------------------------------------------


def cmd_scan(cfg: RunConfig) -> int:
    axis = cfg.option("axis")
    rng = (cfg.require("lo"), cfg.require("hi"))
    sc = th.ScanConfig(n_samples=cfg.option("samples", 8))
    res_ = cfg.require("resolution")
    if axis == "omega":
        result = th.scan_omega_threshold(cfg.model, rng, res_, cfg.grid, cfg.solver, sc)
    elif axis == "mass":
        result = th.scan_mass_threshold(cfg.model, rng, res_, cfg.grid, cfg.solver, sc)
    elif axis == "lambda":
        result = th.scan_lambda_threshold(cfg.model, rng, res_, cfg.grid, cfg.solver, sc, mass=cfg.option("mass", 1.0))
    else:
        raise ConfigError(f"scan.axis must be omega, mass or lambda, got {axis!r}")
    (_out_dir(cfg) / "scan.csv").write_text(result.to_csv())
    print(f"threshold = {result.threshold!r}  bracket = ({result.bracket[0]!r}, {result.bracket[1]!r})")
    return EXIT_OK


# --- evolve -------------------------------------------------------------------------


def _initial_data(cfg: RunConfig):
    p, g = cfg.model, cfg.grid
    preset = cfg.option("u0")
    amp = cfg.option("amplitude")
    if preset == "plane-wave":
        u0 = dy.plane_wave(g, p, amp, [cfg.option("mode_x")] * g.d, [cfg.option("mode_y")] * g.m)
        return u0, lambda t: dy.plane_wave_exact(u0, p, amp, t)
    if preset == "gaussian":
        u = fn.gaussian(g, cfg.option("width"), amp)
        eps = cfg.option("epsilon")
        if g.m and eps:
            u = u.with_values(u.values * (1.0 + eps * sum(np.cos(g.y(j)) for j in range(g.m))))
        return u, None
    if preset == "file":
        path = cfg.option("path")
        if not path:
            raise ConfigError("missing required key evolve.path for u0 = file")
        u, meta = read_snapshot(path)
        if u.grid != g:
            raise ConfigError(f"snapshot grid {u.grid} does not match the configured grid {g}")
        return u, None
    raise ConfigError(f"evolve.u0 must be plane-wave, gaussian or file, got {preset!r}")


def cmd_evolve(cfg: RunConfig, expect_scatter: bool = False) -> int:
    p = cfg.model
    if p.kind is not Kind.ANISOTROPIC:
        raise ConfigError("evolve needs model.kind = anisotropic")
    u0, exact = _initial_data(cfg)
    dt, t_final = cfg.require("dt"), cfg.require("t_final")
    trace = dy.evolve(
        p, u0, dt, t_final, R=cfg.option("R"), sample_every=cfg.option("sample_every"),
        m_c=cfg.option("m_c"), theorem_mode=cfg.option("theorem_mode"),
    )
    out = _out_dir(cfg)
    (out / "trace.csv").write_text(trace.to_csv())
    items = {
        "verdict": trace.verdict.value,
        "t_end": trace.times[-1],
        "mass_drift": abs(trace.mass_series[-1] - trace.mass_series[0]) / max(trace.mass_series[0], 1e-300),
        "energy_drift": abs(trace.energy_series[-1] - trace.energy_series[0]),
    }
    if exact is not None and trace.final is not None:
        items["l2_error"] = (trace.final - exact(trace.times[-1])).l2()
    if trace.final is not None:
        write_snapshot(out / "final.fnls", trace.final, p)
    write_report(out / "report.txt", items)
    print(f"verdict: {trace.verdict.value}")
    if expect_scatter and trace.verdict is dy.Verdict.BLOWUP:
        return EXIT_RUN
    return EXIT_OK


# --- gn -------------------------------------------------------------------------------


def cmd_gn(cfg: RunConfig) -> int:
    si = cfg.option("scale_invariant")
    est = th.gn_estimate(cfg.model, cfg.grid, n_samples=cfg.option("samples"), seed=cfg.seed, scale_invariant=si)
    bad, worst = th.gn_violations(cfg.model, cfg.grid, est.value, cfg.option("check_samples"), cfg.seed + 1, si)
    write_report(
        _out_dir(cfg) / "gn.txt",
        {"constant": est.value, "sampling": est.sampling, "optimized": est.optimized, "seed": est.seed,
         "scale_invariant": si, "violations": bad, "largest_fresh_quotient": worst},
    )
    print(f"constant = {est.value!r}  violations = {bad}")
    return EXIT_OK if bad == 0 else EXIT_CHECK


# --- check ----------------------------------------------------------------------------


def _check_multipliers(seed: int) -> list:
    rng = np.random.default_rng(seed)
    g = Grid(d=1, m=1, lx=3.0, nx=8, ny=8)
    u = Field(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    out = []
    for sym in Symbol:
        desc = MultiplierDescriptor(sym, 0.7, omega=2.0, lam=1.5)
        fast = apply_multiplier(u, build_multiplier(g, desc)).values
        dense = oracle.dense_operator(g, desc)
        err = float(np.max(np.abs(fast - dense.apply(u.values))))
        herm = float(np.max(np.abs(dense.matrix - dense.matrix.conj().T)))
        out.append((f"multiplier {sym.value}", err < 1e-12 and herm < 1e-12, f"err={err:.2e} herm={herm:.2e}"))
    return out


def _check_gradients(seed: int) -> list:
    from .params import ModelParams

    p = ModelParams(d=1, m=1, sigma=0.8, alpha=2.0)
    g = Grid(d=1, m=1, lx=4.0, nx=8, ny=4)
    rng = np.random.default_rng(seed)
    u = Field(g, np.exp(-0.5 * g.r2) * (1 + 0.2 * rng.standard_normal(g.shape)) + 0j)
    num = oracle.fd_gradient(lambda v: fn.energy(v, p), u, 1e-5)
    lu = g.inverse(build_multiplier(g, MultiplierDescriptor(Symbol.ISO_FRAC, p.sigma)).values * u.hat)
    ana = Field(g, lu - np.abs(u.values) ** p.alpha * u.values)
    cos = oracle.gradient_cosine(num, ana)
    mnum = oracle.fd_gradient(fn.mass, u, 1e-5)
    merr = float(np.max(np.abs(mnum.values - 2 * u.values)))
    return [("energy gradient", cos > 1 - 1e-4, f"cos={cos:.12f}"), ("mass gradient", merr < 1e-6, f"err={merr:.2e}")]


def _check_fiber(seed: int) -> list:
    from .params import ModelParams

    p = ModelParams(d=1, m=1, sigma=1.0, alpha=6.0, kind=Kind.ANISOTROPIC)
    g = Grid(d=1, m=1, lx=16.0, nx=128, ny=8)
    u = fn.gaussian(g, 1.0, 1.0)
    ts = np.geomspace(1e-2, 1e2, 401)
    t_grid = oracle.fiber_grid_search(u, p, ts)
    t_star = fn.fiber_critical_t(u, p)
    j = int(np.searchsorted(ts, t_grid))
    lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, len(ts) - 1)]
    return [("fiber maximum", lo <= t_star <= hi, f"grid={t_grid:.6g} root={t_star:.6g}")]


SUITES = {"multipliers": _check_multipliers, "gradients": _check_gradients, "fiber": _check_fiber}


def cmd_check(cfg: RunConfig) -> int:
    suite = cfg.option("suite")
    names = list(SUITES) if suite == "all" else [suite]
    if any(n not in SUITES for n in names):
        raise ConfigError(f"check.suite must be one of {', '.join([*SUITES, 'all'])}, got {suite!r}")
    ok = True
    for name in names:
        for label, passed, detail in SUITES[name](cfg.seed):
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {"groundstate": cmd_groundstate, "scan": cmd_scan, "evolve": cmd_evolve, "gn": cmd_gn, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fnls", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="flat key = value config file")
    ap.add_argument("--out", help="output directory (overrides the config's out key)")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config's seed key)")
    ap.add_argument("--expect-scatter", action="store_true", help="evolve: exit 2 on a blow-up verdict")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = with_overrides(load_config(args.config, args.command), out=args.out, seed=args.seed)
        if args.command == "evolve":
            return cmd_evolve(cfg, args.expect_scatter)
        return COMMANDS[args.command](cfg)
    except (ConfigError, SnapshotError, ValueError) as exc:
        # RegimeError and invalid parameter values are ValueErrors too
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except th.ScanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
