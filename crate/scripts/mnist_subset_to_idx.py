#!/usr/bin/env python3
"""Write the 5000-sample MNIST subset shipped with mlxtend as IDX files.

Usage: mnist_subset_to_idx.py <mlxtend wheel or mnist_5k.csv.gz> <out_dir>

Produces <out_dir>/train-images-idx3-ubyte and train-labels-idx1-ubyte.
"""
import gzip
import os
import struct
import sys
import zipfile


def read_rows(path):
    if path.endswith(".whl"):
        with zipfile.ZipFile(path) as z:
            raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        with open(path, "rb") as f:
            raw = f.read()
    text = gzip.decompress(raw).decode()
    for line in text.splitlines():
        vals = [int(float(v)) for v in line.split(",")]
        yield vals[:-1], vals[-1]


def main():
    src, out = sys.argv[1], sys.argv[2]
    rows = list(read_rows(src))
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(rows), 28, 28))
        for px, _ in rows:
            f.write(bytes(px))
    with open(os.path.join(out, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, len(rows)))
        f.write(bytes(label for _, label in rows))
    print(f"wrote {len(rows)} samples to {out}")


if __name__ == "__main__":
    main()
