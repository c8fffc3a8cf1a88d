#!/usr/bin/env python3
# Copyright 2026 The DPIS Toolkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds a gzipped IDX train/test split from the npm `mnist` package.

The npm package (https://www.npmjs.com/package/mnist) ships 10,000 MNIST
digits as JSON, one file per class, with pixels already scaled to [0, 1].
This script converts them back to u8 pixels and writes the standard
`*-idx3-ubyte.gz` / `*-idx1-ubyte.gz` files that `dpis` loads.

    npm pack mnist && tar xzf mnist-*.tgz
    tools/make_mnist_subset.py package/src/digits data/mnist_subset
"""

import argparse
import gzip
import json
import pathlib
import random
import struct


def load_digits(digits_dir):
  samples = []
  for label in range(10):
    with open(pathlib.Path(digits_dir) / f"{label}.json") as f:
      flat = json.load(f)["data"]
    if len(flat) % 784:
      raise ValueError(f"{label}.json: length {len(flat)} not a multiple of 784")
    for i in range(0, len(flat), 784):
      pixels = bytes(min(255, max(0, round(v * 255))) for v in flat[i:i + 784])
      samples.append((pixels, label))
  return samples


def write_idx(prefix, samples):
  with gzip.GzipFile(f"{prefix}-images-idx3-ubyte.gz", "wb", mtime=0) as f:
    f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
    for pixels, _ in samples:
      f.write(pixels)
  with gzip.GzipFile(f"{prefix}-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
    f.write(struct.pack(">II", 0x00000801, len(samples)))
    f.write(bytes(label for _, label in samples))


def main():
  parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
  parser.add_argument("digits_dir")
  parser.add_argument("out_dir")
  parser.add_argument("--train", type=int, default=6000)
  parser.add_argument("--test", type=int, default=1000)
  parser.add_argument("--seed", type=int, default=20221107)
  args = parser.parse_args()

  samples = load_digits(args.digits_dir)
  if args.train + args.test > len(samples):
    raise SystemExit(f"only {len(samples)} digits available")
  random.Random(args.seed).shuffle(samples)
  out = pathlib.Path(args.out_dir)
  out.mkdir(parents=True, exist_ok=True)
  write_idx(out / "train", samples[:args.train])
  write_idx(out / "t10k", samples[args.train:args.train + args.test])
  print(f"wrote {args.train} train / {args.test} test digits to {out}")


if __name__ == "__main__":
  main()
