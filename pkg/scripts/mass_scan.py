"""Mass threshold c* (or torus-weight threshold lambda*) for normalized ground states.

    python3 scripts/mass_scan.py --axis mass --lo 0.5 --hi 100
    python3 scripts/mass_scan.py --axis lambda --lo 0.1 --hi 10 --mass 20
"""

import argparse
import csv
import io
from pathlib import Path

from fnls import thresholds as th
from fnls.params import Kind, ModelParams
from fnls.spectral import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--axis", choices=["mass", "lambda"], default="mass")
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.ISOTROPIC.value)
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=100.0)
    ap.add_argument("--resolution", type=float, default=0.5)
    ap.add_argument("--samples", type=int, default=8)
    ap.add_argument("--mass", type=float, default=20.0, help="fixed mass for the lambda axis")
    ap.add_argument("--lx", type=float, default=32.0)
    ap.add_argument("--nx", type=int, default=128)
    ap.add_argument("--ny", type=int, default=16)
    ap.add_argument("--out", type=Path, default=None, help="write the scan CSV here")
    args = ap.parse_args()

    p = ModelParams(d=1, m=1, sigma=args.sigma, alpha=args.alpha, kind=Kind(args.kind))
    g = Grid(d=1, m=1, lx=args.lx, nx=args.nx, ny=args.ny)
    sc = th.ScanConfig(n_samples=args.samples)
    rng = (args.lo, args.hi)
    if args.axis == "mass":
        res = th.scan_mass_threshold(p, rng, args.resolution, g, sc=sc)
    else:
        res = th.scan_lambda_threshold(p, rng, args.resolution, g, sc=sc, mass=args.mass)
    text = res.to_csv()
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
    print(f"{'value':>12} {'minimum':>14} {'flat':>14} {'y_dep':>10}  ind")
    for row in list(csv.reader(io.StringIO(text)))[1:-1]:
        v, mn, yd, fl, ind = row
        print(f"{float(v):12.5f} {float(mn):14.8f} {float(fl):14.8f} {float(yd):10.2e}  {ind}")
    print(f"threshold = {res.threshold:.5f}  bracket = {res.bracket}  one_sided = {res.one_sided}")


if __name__ == "__main__":
    main()
