#!/usr/bin/env python3
"""Pack the per-digit JSON files of the `mnist` npm package (10k MNIST digits)
into the standard gzipped IDX archives read by the mnist dataset profile.

Every 10th sample of the class-interleaved sequence goes to the test split.
"""
import argparse
import gzip
import json
import struct
from pathlib import Path


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", help="package/src/digits from the mnist npm tarball")
    ap.add_argument("out_dir")
    args = ap.parse_args()

    per_class = []
    for label in range(10):
        values = json.loads(Path(args.digits_dir, f"{label}.json").read_text())["data"]
        pixels = [round(v * 255) for v in values]
        per_class.append([pixels[i:i + 784] for i in range(0, len(pixels), 784)])

    ordered = []
    depth = max(len(c) for c in per_class)
    for i in range(depth):
        for label in range(10):
            if i < len(per_class[label]):
                ordered.append((label, per_class[label][i]))

    splits = {"train": [], "t10k": []}
    for i, sample in enumerate(ordered):
        splits["t10k" if i % 10 == 9 else "train"].append(sample)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, samples in splits.items():
        images = [p for _, img in samples for p in img]
        labels = [label for label, _ in samples]
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, [len(samples), 28, 28], images)
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, [len(samples)], labels)
        print(f"{name}: {len(samples)} images")


if __name__ == "__main__":
    main()
