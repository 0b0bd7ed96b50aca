"""P0/P1/P2 over the (pulse area, phase) plane for both interferometer models, plus accessible ranges."""

import argparse
import math

import numpy as np

from timebin import analytic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=101)
    ap.add_argument("--out", default="landscape.npz")
    ap.add_argument("--plot", action="store_true", help="also save landscape.png (needs matplotlib)")
    args = ap.parse_args()

    thetas = np.linspace(0, math.pi, args.resolution)
    phis = np.linspace(0, 2 * math.pi, args.resolution)
    grids = {}
    for model in ("single_mzi", "dual_hom"):
        arr = np.array([[analytic.probs(t, p, model) for p in phis] for t in thetas])
        grids[model] = arr
        ranges = analytic.accessible_ranges(model)
        print(model, {k: (round(lo, 4), round(hi, 4)) for k, (lo, hi) in ranges.items()})
    np.savez(args.out, theta=thetas, phi=phis, **grids)
    print(args.out)

    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(2, 3, figsize=(11, 6), constrained_layout=True)
        for row, (model, arr) in zip(axes, grids.items()):
            for j, ax in enumerate(row):
                im = ax.pcolormesh(phis / math.pi, thetas / math.pi, arr[:, :, j], shading="auto")
                ax.set_title(f"{model} P{j}")
                ax.set_xlabel("phase / pi")
                ax.set_ylabel("pulse area / pi")
                fig.colorbar(im, ax=ax)
        fig.savefig("landscape.png", dpi=120)
        print("landscape.png")


if __name__ == "__main__":
    main()
