"""Image entropy after downscaling to a set of resolutions and upscaling back.

Reads PGM/PPM files, or synthesises a smooth noisy RGB test image when none
are given.
"""

import argparse

import numpy as np

from faceuniq.entropy import Image, entropy_bound, image_entropy, load_pnm, resample


def test_image(size=224, seed=0):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    base = np.stack([np.sin(6 * x + c) * np.cos(4 * y - c) for c in (0.0, 1.0, 2.0)], axis=-1)
    px = np.clip(127.5 * (base + 1) + rng.normal(0, 12, base.shape), 0, 255)
    return Image.from_array(px.astype(np.uint8), depth=8)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("paths", nargs="*")
    ap.add_argument("--sizes", type=int, nargs="+", default=[224, 112, 64, 48, 36])
    ap.add_argument("--target", type=int, default=224)
    args = ap.parse_args()

    images = [load_pnm(p) for p in args.paths] or [test_image(args.target)]
    print("size\tmean_entropy_bits\tmean_bound_bits")
    for s in args.sizes:
        hs, bs = [], []
        for img in images:
            small = resample(img, s, s)
            hs.append(image_entropy(resample(small, args.target, args.target)))
            bs.append(entropy_bound(small))
        print(f"{s}\t{np.mean(hs):.4f}\t{np.mean(bs):.4f}")


if __name__ == "__main__":
    main()
