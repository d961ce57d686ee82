"""Regenerate the plot data behind the charging experiments.

Writes, under --out (default results/):
  traces/   per-location voltage traces for constant, 36- and 100-vector sets
  fig_<mode>/cdf.csv, summary.csv   energy CDFs for every scheme at 0.6 m and 1.2 m
  sweep_ncv.csv   zero-energy probability versus n_cv at 1.2 m
"""

import argparse
import sys
from pathlib import Path

from magbb.cli import main
from magbb.config import ExperimentConfig


def run(argv):
    rc = main(argv)
    if rc:
        sys.exit(rc)


def cli():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--samples", type=int, default=10000)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    out = Path(args.out)
    common = ["--workers", str(args.workers)]

    cfg = ExperimentConfig()
    for scheme, n in (("constant", 1), ("grid", 36), ("grid", 100)):
        name = f"{scheme}{n if scheme == 'grid' else ''}.json"
        run(["design", "--scheme", scheme, "--n-cv", str(n), "--name", name, "--out", str(out / "sets"), *common])
        for loc in cfg.locations:
            run(["trace", "--current-set", str(out / "sets" / name), "--theta", str(loc.theta_deg),
                 "--phi", str(loc.phi_deg), "--rx-theta", "45", "--rx-phi", "30",
                 "--name", f"{Path(name).stem}_{loc.name}.csv", "--out", str(out / "traces")])

    for mode in ("fixed_location", "random_location"):
        run(["mc", "--mode", mode, "--samples", str(args.samples), "--out", str(out / f"fig_{mode}"), *common])

    run(["sweep", "--variable", "n_cv", "--values", "4", "8", "36", "100", "--samples", str(args.samples),
         "--name", "sweep_ncv.csv", "--out", str(out), *common])
    print((out / "fig_fixed_location" / "summary.csv").read_text())


if __name__ == "__main__":
    cli()
