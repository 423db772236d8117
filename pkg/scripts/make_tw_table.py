"""Generate the embedded TW(1) CDF table.

F1(s) is evaluated as the Fredholm determinant det(I - K) on L2(s, inf) with
kernel K(x, y) = Ai((x + y) / 2) / 2, discretized by Gauss-Legendre quadrature
(Bornemann 2010, Math. Comp. 79).  The result is written as ``s,cdf`` rows.

    python scripts/make_tw_table.py [--nodes 120] [--step 0.005]
"""
import argparse
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import airy

OUT = Path(__file__).resolve().parents[1] / "src" / "twempirical" / "data" / "tw1_cdf.csv"


def fredholm_f1(s, nodes=120, upper=16.0):
    b = max(s, 0.0) + upper
    x, w = leggauss(nodes)
    x = s + (x + 1.0) * (b - s) / 2.0
    w = w * (b - s) / 2.0
    sw = np.sqrt(w)
    kernel = 0.5 * airy((x[:, None] + x[None, :]) / 2.0)[0]
    return np.linalg.det(np.eye(nodes) - sw[:, None] * kernel * sw[None, :])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--nodes", type=int, default=120)
    parser.add_argument("--step", type=float, default=0.005)
    parser.add_argument("--lo", type=float, default=-10.0)
    parser.add_argument("--hi", type=float, default=8.0)
    parser.add_argument("--out", type=Path, default=OUT)
    args = parser.parse_args()

    count = int(round((args.hi - args.lo) / args.step)) + 1
    grid = np.round(np.linspace(args.lo, args.hi, count), 10)
    cdf = np.array([fredholm_f1(s, args.nodes) for s in grid])
    if not np.all(np.diff(cdf) > 0):
        raise SystemExit("table is not strictly increasing; raise --nodes")

    with open(args.out, "w") as fh:
        fh.write(f"# TW(1) CDF: Fredholm determinant, Gauss-Legendre {args.nodes} nodes\n")
        fh.write("s,cdf\n")
        for s, f in zip(grid, cdf):
            fh.write(f"{s:.3f},{f:.17g}\n")
    print(f"wrote {count} rows to {args.out}")


if __name__ == "__main__":
    main()
