"""How the sampled g2(0) and extracted probabilities approach the exact values as the run grows."""

import argparse
import math

from timebin import analytic
from timebin.correlator import g2_histogram, normalize_side_peaks
from timebin.extraction import estimate_from_stream
from timebin.interferometer import MziConfig
from timebin.oracle import exact_photon_dist
from timebin.sampler import DetectorModel, RunConfig, SplitterTree, sample_stream
from timebin.seed import SeedSpec, seed_pure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta-pi", type=float, default=0.25)
    ap.add_argument("--phi-pi", type=float, default=0.87)
    ap.add_argument("--efficiency", type=float, default=1.0)
    ap.add_argument("--max-exponent", type=int, default=6)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    theta, phi = args.theta_pi * math.pi, args.phi_pi * math.pi
    optics = MziConfig(phase=phi)
    target = analytic.g2_auto(theta, phi, 0)
    probs = exact_photon_dist(seed_pure(theta), optics)
    print(f"exact g2(0) = {target:.5f}, exact P = {tuple(round(p, 5) for p in probs)}")
    print(f"{'bins':>9} {'g2(0)':>8} {'stderr':>8} {'z':>6}  P0 P1 P2 (jackknife)")
    for e in range(3, args.max_exponent + 1):
        stream = sample_stream(RunConfig(10 ** e, rng_seed=args.seed), SeedSpec(theta), optics,
                               DetectorModel(args.efficiency, photon_number_resolving=True), SplitterTree("hbt"))
        try:
            norm = normalize_side_peaks(g2_histogram(stream, 0, 1))
            est = estimate_from_stream(stream, 0, 1, args.efficiency)
        except (ZeroDivisionError, ValueError) as exc:
            print(f"{10 ** e:>9} too few counts ({exc})")
            continue
        g, se = norm[0], norm.stderr[0]
        ps = " ".join(f"{p:.4f}+-{s:.4f}" for p, s in zip(est.probs.as_tuple(), est.stderr))
        print(f"{10 ** e:>9} {g:8.4f} {se:8.4f} {(g - target) / se:6.2f}  {ps}")


if __name__ == "__main__":
    main()
