#!/usr/bin/env python3
# Copyright 2026 The qseq Authors
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
"""Exports scikit-learn's 8x8 digits as CSV: 64 pixel columns (0..16) and a label."""

import argparse

from sklearn.datasets import load_digits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/digits.csv")
    args = ap.parse_args()
    d = load_digits()
    with open(args.out, "w", newline="\n") as f:
        f.write(",".join(f"pixel_{i}" for i in range(64)) + ",target\n")
        for x, y in zip(d.data, d.target):
            f.write(",".join(str(int(v)) for v in x) + f",{int(y)}\n")


if __name__ == "__main__":
    main()
