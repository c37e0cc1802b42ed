#!/usr/bin/env python3
"""Converts the per-digit JSON dumps of the `mnist` npm package to gzipped IDX.

Usage: mnist_json_to_idx.py <digits-dir> <out-dir>

Each `<d>.json` holds {"data": [784 * n floats in [0, 1] with 3 decimals]}.
Per digit, the first 5/6 of the images go to the training split and the rest
to the test split; both are interleaved round-robin by digit.
"""
import gzip
import json
import struct
import sys
from pathlib import Path


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload)


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    per_digit = []
    for d in range(10):
        data = json.loads((src / f"{d}.json").read_text())["data"]
        pix = bytes(round(v * 255) for v in data)
        per_digit.append([pix[i : i + 784] for i in range(0, len(pix), 784)])
    splits = {"train": [], "t10k": []}
    for d, imgs in enumerate(per_digit):
        cut = len(imgs) * 5 // 6
        splits["train"].append((d, imgs[:cut]))
        splits["t10k"].append((d, imgs[cut:]))
    for name, parts in splits.items():
        images, labels = [], []
        for i in range(max(len(p) for _, p in parts)):
            for d, p in parts:
                if i < len(p):
                    images.append(p[i])
                    labels.append(d)
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, [len(images), 28, 28], b"".join(images))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, [len(labels)], bytes(labels))
        print(name, len(images))


if __name__ == "__main__":
    main()
