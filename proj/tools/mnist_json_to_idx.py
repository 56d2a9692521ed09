#!/usr/bin/env python3
"""Convert the digit JSON files shipped in the `mnist` npm package into IDX files.

The npm package (https://www.npmjs.com/package/mnist) bundles 10,000 MNIST
digits as src/digits/<label>.json with pixels stored as x/255 rounded to three
decimals. This script restores the original bytes, shuffles with a fixed seed
and writes train/test splits in the big-endian IDX container.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_json_to_idx.py package/src/digits data/mnist
"""
import argparse
import json
import pathlib
import struct

import numpy as np


def write_images(path, images):
    n = images.shape[0]
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("digits_dir")
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=8000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    images, labels = [], []
    for label in range(10):
        data = json.loads(pathlib.Path(args.digits_dir, f"{label}.json").read_text())["data"]
        pixels = np.rint(np.asarray(data, dtype=np.float64) * 255.0).clip(0, 255)
        pixels = pixels.reshape(-1, 784)
        images.append(pixels)
        labels.append(np.full(pixels.shape[0], label))
    images = np.concatenate(images)
    labels = np.concatenate(labels)

    order = np.random.RandomState(args.seed).permutation(images.shape[0])
    images, labels = images[order], labels[order]

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", images[: args.train])
    write_labels(out / "train-labels-idx1-ubyte", labels[: args.train])
    write_images(out / "t10k-images-idx3-ubyte", images[args.train :])
    write_labels(out / "t10k-labels-idx1-ubyte", labels[args.train :])
    print(f"wrote {args.train} train / {images.shape[0] - args.train} test images to {out}")


if __name__ == "__main__":
    main()
