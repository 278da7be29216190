#!/usr/bin/env python3
"""Convert the 10,000-digit MNIST subset shipped in the npm `mnist` package
(MIT licensed, src/digits/<d>.json) into gzipped IDX files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/

Samples are interleaved with a fixed-seed shuffle so any prefix/suffix split is
close to class-balanced.
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def main(src: Path, dst: Path) -> None:
    samples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        for i in range(len(data) // 784):
            pixels = bytes(round(v * 255) for v in data[i * 784:(i + 1) * 784])
            samples.append((pixels, digit))
    random.Random(20210101).shuffle(samples)

    dst.mkdir(parents=True, exist_ok=True)
    n = len(samples)
    with gzip.GzipFile(dst / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with gzip.GzipFile(dst / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(label for _, label in samples))
    print(f"wrote {n} samples to {dst}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(Path(sys.argv[1]), Path(sys.argv[2]))
