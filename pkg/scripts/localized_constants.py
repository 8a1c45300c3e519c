"""Constants of the localized normalized problem and a ground state inside the admissible mass range."""

import argparse

from fnls import ground_state as gs
from fnls import thresholds as th
from fnls.params import ModelParams
from fnls.spectral import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=2.2)
    ap.add_argument("--mass", type=float, default=5.0)
    args = ap.parse_args()

    p = ModelParams(d=1, m=1, sigma=args.sigma, alpha=args.alpha)
    k1 = th.reference_u1_kinetic(p, Grid(d=1, m=0, lx=16.0, nx=128))
    c_gn = th.gn_constant(p, Grid(d=1, m=1, lx=16.0, nx=64, ny=16), seed=1)
    lc = th.localized_constants(p, c_gn, k1)
    print(f"l={lc.l:.6f} k={lc.k:.6f} M0={lc.M0:.6f} M1={lc.M1:.6f} GN={lc.gn_constant:.6f}")
    print(f"rho0={lc.rho0:.8f} c_max={lc.c_max:.6f} residuals={lc.a_residual:.1e}/{lc.rho_residual:.1e}")
    if args.mass < lc.c_max:
        res = gs.solve_normalized_localized(p, args.mass, lc.rho0, Grid(d=1, m=1, lx=64.0, nx=256, ny=16),
                                            gs.SolverConfig(width=8.0))
        print(f"c={args.mass}: energy={res.c_value:.8f} kinetic={res.report.kinetic:.6f} "
              f"y_dependence={res.y_dependence:.2e} converged={res.converged}")
    else:
        print(f"c={args.mass} is above c_max; no localized minimizer is guaranteed")


if __name__ == "__main__":
    main()
