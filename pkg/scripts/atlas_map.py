"""Growth-rate map of the (alpha, beta) parameter plane for the sinus flow.

Scans a rectangle with the atlas driver, writes the classified points with
their maximal growth rates to CSV, and can render the map with the four
resonant curves overlaid.  Points on a curve are measure zero, so the scan
itself tags almost everything Gamma; the overlay shows where the embedded
resonances thread through the stability landscape.
"""

import argparse
import csv

import numpy as np

from betaplane.atlas import BAND, gamma_point, scan_atlas

CURVE_RANGES = {"gamma1": (-np.pi**2 / 2, np.pi**2 / 2),
                "gamma2": (0.25, 1.0),
                "gamma3": (0.25, 0.5),
                "gamma4": (0.25, 0.5)}


def curve_trace(curve, samples=200):
    lo, hi = CURVE_RANGES[curve]
    pad = 1e-4 * (hi - lo)
    params = np.linspace(lo + pad, hi - pad, samples)
    pts = [gamma_point(curve, p) for p in params]
    return [p.alpha for p in pts], [p.beta for p in pts]


def plot_map(scan, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.5, 5))
    growth = np.where(np.isfinite(scan.growth), scan.growth, 0.0)
    mesh = ax.pcolormesh(scan.alphas, scan.betas, growth.T, shading="nearest",
                         cmap="magma")
    fig.colorbar(mesh, ax=ax, label="max growth rate")
    for curve in CURVE_RANGES:
        xs, ys = curve_trace(curve)
        ax.plot(xs, ys, lw=1.2, label=curve)
    ax.set_xlim(scan.alphas[0], scan.alphas[-1])
    ax.set_ylim(scan.betas[0], scan.betas[-1])
    ax.set_xlabel("alpha")
    ax.set_ylabel("beta")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    print("plot -> %s" % path)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha-range", type=float, nargs=2, default=[0.3, 3.0])
    ap.add_argument("--beta-range", type=float, nargs=2,
                    default=[-0.99 * BAND, 0.99 * BAND])
    ap.add_argument("--n-alpha", type=int, default=9)
    ap.add_argument("--n-beta", type=int, default=9)
    ap.add_argument("--spectrum-n", type=int, default=96)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="atlas_map.csv")
    ap.add_argument("--plot", default=None, metavar="PNG")
    args = ap.parse_args()

    scan = scan_atlas(tuple(args.alpha_range), tuple(args.beta_range),
                      args.n_alpha, args.n_beta, workers=args.workers,
                      spectrum_n=args.spectrum_n)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "beta", "tag", "growth_rate"])
        for i, a in enumerate(scan.alphas):
            for j, b in enumerate(scan.betas):
                writer.writerow(["%.17g" % a, "%.17g" % b, scan.tags[i][j],
                                 "%.17g" % scan.growth[i, j]])
    print("wrote %s" % args.out)

    finite = scan.growth[np.isfinite(scan.growth)]
    unstable = int((finite > 1e-8).sum())
    print("%d points, %d with growth, max rate %.4g"
          % (scan.growth.size, unstable, finite.max() if finite.size else 0.0))
    if scan.errors:
        print("%d eigensolver failures (first: %s)"
              % (len(scan.errors), scan.errors[0][2]))
    if args.plot:
        plot_map(scan, args.plot)


if __name__ == "__main__":
    main()
