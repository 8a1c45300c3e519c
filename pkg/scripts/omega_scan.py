"""Frequency threshold omega* for the isotropic model, at two x-resolutions.

    python3 scripts/omega_scan.py --sigma 0.75 --alpha 2 --out runs/omega
"""

import argparse
import time
from pathlib import Path

from fnls import thresholds as th
from fnls.params import ModelParams
from fnls.spectral import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=0.75)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--lo", type=float, default=0.1)
    ap.add_argument("--hi", type=float, default=50.0)
    ap.add_argument("--resolution", type=float, default=1e-3)
    ap.add_argument("--lx", type=float, default=32.0)
    ap.add_argument("--nx", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--ny", type=int, default=16)
    ap.add_argument("--out", type=Path, default=Path("runs/omega"))
    args = ap.parse_args()

    p = ModelParams(d=1, m=1, sigma=args.sigma, alpha=args.alpha)
    args.out.mkdir(parents=True, exist_ok=True)
    found = []
    for nx in args.nx:
        t0 = time.perf_counter()
        res = th.scan_omega_threshold(p, (args.lo, args.hi), args.resolution, Grid(d=1, m=1, lx=args.lx, nx=nx, ny=args.ny))
        (args.out / f"scan_nx{nx}.csv").write_text(res.to_csv())
        found.append(res.threshold)
        lo, hi = res.bracket
        print(f"nx={nx:5d}  omega*={res.threshold:.5f}  bracket=({lo:.5f}, {hi:.5f})  "
              f"certificate={res.certificate()}  {time.perf_counter() - t0:.1f} s")
    if len(found) > 1:
        print(f"relative shift under refinement: {abs(found[-1] - found[-2]) / found[-1]:.2%}")


if __name__ == "__main__":
    main()
