#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Build a small MNIST train/test split in gzipped IDX format.

Source: the 5000-sample MNIST subset shipped inside the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz, 500 images per digit, label in the last
column). Pass the CSV directly, or let the script fetch the wheel with pip.

    python3 scripts/make_mnist_subset.py --out data/mnist-5k
"""

import argparse
import glob
import gzip
import os
import struct
import subprocess
import sys
import tempfile
import zipfile

import numpy as np


def fetch_csv(workdir):
    subprocess.run([sys.executable, "-m", "pip", "download", "mlxtend==0.24.0", "--no-deps",
                    "-q", "-d", workdir], check=True)
    wheel = glob.glob(os.path.join(workdir, "mlxtend-*.whl"))[0]
    member = "mlxtend/data/data/mnist_5k.csv.gz"
    with zipfile.ZipFile(wheel) as zf:
        zf.extract(member, workdir)
    return os.path.join(workdir, member)


def write_idx(path, array, magic):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in array.shape:
            f.write(struct.pack(">I", d))
        f.write(array.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", help="path to mnist_5k.csv.gz (fetched when omitted)")
    ap.add_argument("--out", default="data/mnist-5k")
    ap.add_argument("--train-per-class", type=int, default=400)
    ap.add_argument("--seed", type=int, default=20191007)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        csv = args.csv or fetch_csv(tmp)
        data = np.loadtxt(gzip.open(csv), delimiter=",")
    images = data[:, :-1].reshape(-1, 28, 28)
    labels = data[:, -1].astype(np.int64)

    rng = np.random.default_rng(args.seed)
    train_idx, test_idx = [], []
    for digit in range(10):
        idx = rng.permutation(np.flatnonzero(labels == digit))
        train_idx.extend(idx[:args.train_per_class])
        test_idx.extend(idx[args.train_per_class:])
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)

    os.makedirs(args.out, exist_ok=True)
    for name, idx in (("train", train_idx), ("t10k", test_idx)):
        write_idx(os.path.join(args.out, f"{name}-images-idx3-ubyte.gz"), images[idx], 0x00000803)
        write_idx(os.path.join(args.out, f"{name}-labels-idx1-ubyte.gz"), labels[idx], 0x00000801)
        print(f"{name}: {len(idx)} samples")


if __name__ == "__main__":
    main()
