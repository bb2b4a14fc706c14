"""Critical-layer scaling probe at the interior maximum of the sinus flow.

Approaches the spectral parameter c = u(0) + i*eps from above for a ladder
of eps and records |Phi(0)| and the layer vorticity |(Phi'' - a^2 Phi)(0)|.
The stream function should vanish as eps -> 0 while the layer vorticity is
allowed to grow, but slower than 1/eps; the fitted slopes quantify both.
"""

import argparse
import csv

import numpy as np

from betaplane.fieldops import ComplexField, Grid
from betaplane.profiles import make_profile
from betaplane.rayleighkuo import critical_layer_probe


def probe_one(beta, n, eps_list):
    sinus = make_profile("sinus", {})
    grid = Grid(n, -1.0, 1.0)
    y = grid.nodes
    omega = ComplexField(grid, np.sin(np.pi * y) * (1 + y) / 2 + 0j)
    return critical_layer_probe(sinus, 1.0, beta, 0.0, eps_list, omega, grid)


def plot_probes(probes, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharex=True)
    for beta, probe in probes:
        axes[0].loglog(probe.eps, probe.phi_values, "o-", ms=3,
                       label="beta = %g" % beta)
        axes[1].loglog(probe.eps, probe.wlayer_values, "o-", ms=3)
    axes[0].set_ylabel("|Phi(0)|")
    axes[1].set_ylabel("layer vorticity at 0")
    for ax in axes:
        ax.set_xlabel("eps")
    axes[0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    print("plot -> %s" % path)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 1.0, -1.0])
    ap.add_argument("--n", type=int, default=384, help="grid intervals")
    ap.add_argument("--eps-decades", type=float, nargs=2, default=[-4.0, -1.0])
    ap.add_argument("--eps-count", type=int, default=10)
    ap.add_argument("--out", default="layer_scaling.csv")
    ap.add_argument("--plot", default=None, metavar="PNG")
    args = ap.parse_args()

    eps_list = tuple(np.logspace(args.eps_decades[0], args.eps_decades[1],
                                 args.eps_count))
    probes = []
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "eps", "abs_phi", "abs_layer_vorticity"])
        for beta in args.betas:
            probe = probe_one(beta, args.n, eps_list)
            probes.append((beta, probe))
            for eps, phi, lay in zip(probe.eps, probe.phi_values,
                                     probe.wlayer_values):
                writer.writerow(["%.17g" % beta, "%.17g" % eps,
                                 "%.17g" % phi, "%.17g" % lay])
            print("beta %-6g phi ~ eps^%.3f   layer ~ eps^%.3f"
                  % (beta, probe.exponent_phi, probe.exponent_wlayer))
    print("wrote %s" % args.out)
    if args.plot:
        plot_probes(probes, args.plot)


if __name__ == "__main__":
    main()
