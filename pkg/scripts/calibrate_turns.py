"""Scan transmitter/receiver turn counts and report zero-energy probabilities at 1.2 m.

Useful for choosing default coil turns: the harvested energy scales with
(N_t * N_r)^2, so the scan is over the product.
"""

import argparse
import math

from magbb.beamform import DesignParams, design_set
from magbb.chargesim import ChargingPolicy, FixedLocation, monte_carlo
from magbb.fieldcore import CoilSpec, SphericalLocation

SCHEMES = [("constant", 1), ("orthonormal3", 3), ("grid", 4), ("grid", 8), ("grid", 100)]


def scan(pairs, samples, seed, workers):
    loc = SphericalLocation(1.2, math.pi, 0.0)
    print("n_t,n_r," + ",".join(s if s != "grid" else f"grid{n}" for s, n in SCHEMES))
    for n_t, n_r in pairs:
        p = DesignParams(tx=CoilSpec(0.1, n_t, 1.0), rx=CoilSpec(0.01, n_r, 0.2))
        zps = []
        for scheme, n in SCHEMES:
            cs = design_set(loc, n, scheme, p, seed=seed)
            res = monte_carlo(ChargingPolicy(cs), samples, FixedLocation(loc), seed, p.tx, p.rx, p.medium, p.v_th,
                              workers=workers)
            zps.append(res.zero_probability)
        print(f"{n_t},{n_r}," + ",".join(f"{z:.4f}" for z in zps))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", nargs="+", default=["20x10", "25x18", "25x20", "26x20", "28x20", "30x20", "35x20"],
                    help="N_t x N_r pairs, e.g. 25x20")
    ap.add_argument("--samples", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=4)
    a = ap.parse_args()
    scan([tuple(int(x) for x in p.split("x")) for p in a.pairs], a.samples, a.seed, a.workers)
