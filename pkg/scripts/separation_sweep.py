"""Uniqueness as a function of the between/within spread ratio, as plot-ready TSV."""

import argparse

import numpy as np

from faceuniq.scoring import dataset_uniqueness
from faceuniq.synth import SynthSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--subjects", type=int, default=10)
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.25, 0.5, 1, 2, 4, 8])
    args = ap.parse_args()

    print("ratio\td_bar_mean\tu_mean\tu_std")
    for ratio in args.ratios:
        reps = [dataset_uniqueness(generate(SynthSpec(args.subjects, args.samples, args.dim, ratio, 1.0, seed=s)), s)
                for s in range(args.seeds)]
        us = np.array([r.u for r in reps])
        print(f"{ratio}\t{np.mean([r.d_bar for r in reps]):.4f}\t{us.mean():.4f}\t{us.std():.4f}")


if __name__ == "__main__":
    main()
