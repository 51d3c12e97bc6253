#!/usr/bin/env python3
# Copyright 2026 The dflpool Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds the bundled 10k MNIST subset as gzipped IDX files.

Source: the `mnist` npm package (10,000 MNIST digits stored as JSON arrays
of 784 normalized pixel intensities per digit, one file per class).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist_subset.py package/src/digits data/mnist-10k

Samples are written class-major (all zeros, then all ones, ...). Pixels are
rescaled to unsigned bytes with round(v * 255).
"""

import argparse
import gzip
import json
import pathlib
import struct

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
ROWS = COLS = 28


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=pathlib.Path)
    parser.add_argument("out_dir", type=pathlib.Path)
    args = parser.parse_args()

    pixels = bytearray()
    labels = bytearray()
    for digit in range(10):
        data = json.loads((args.digits_dir / f"{digit}.json").read_text())["data"]
        if len(data) % (ROWS * COLS) != 0:
            raise SystemExit(f"{digit}.json: {len(data)} values is not a multiple of 784")
        count = len(data) // (ROWS * COLS)
        pixels.extend(min(255, max(0, round(v * 255))) for v in data)
        labels.extend([digit] * count)

    n = len(labels)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    # mtime=0 keeps the archives byte-reproducible.
    with gzip.GzipFile(args.out_dir / "images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, ROWS, COLS))
        f.write(bytes(pixels))
    with gzip.GzipFile(args.out_dir / "labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(bytes(labels))
    print(f"wrote {n} samples to {args.out_dir}")


if __name__ == "__main__":
    main()
