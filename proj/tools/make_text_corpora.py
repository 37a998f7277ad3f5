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
"""Writes the small sentence-classification corpora used by the examples.

mc: four-word sentences about cooking (label 1) or computing (label 0).
rp: "noun that verb noun" (subject relative, label 0) versus
    "noun that noun verb" (object relative, label 1).

Output is label<TAB>sentence, one sample per line. The generator is seeded so
the files are reproducible byte for byte.
"""

import argparse
import itertools
import pathlib
import random

PERSONS = ["man", "woman", "person"]
FOOD_VERBS = ["cooks", "prepares"]
IT_VERBS = ["runs", "debugs", "prepares"]
FOOD_OBJS = ["meal", "dinner", "sauce"]
IT_OBJS = ["program", "application", "software"]
FOOD_ADJS = ["tasty", "delicious"]
IT_ADJS = ["useful"]

NOUNS = """
aircraft army artist bank book building car church city company computer
country court device doctor engine factory farmer government group hospital
journal king leader magazine market museum newspaper officer organization
painter patient plant player police president school scientist ship
soldier student teacher team university writer
""".split()
VERBS = """
admires attacks builds buys calls carries checks collects creates defends
designs destroys detects develops employs establishes finds follows funds
helps hires inspects leads loves manages meets moves needs owns paints
praises produces protects publishes reads repairs sells serves studies
supports teaches trains uses visits writes
""".split()


def mc_sentences():
    out = []
    for domain, verbs, objs, adjs in ((1, FOOD_VERBS, FOOD_OBJS, FOOD_ADJS), (0, IT_VERBS, IT_OBJS, IT_ADJS)):
        for p, v, o in itertools.product(PERSONS, verbs, objs):
            out.append((domain, f"skillful {p} {v} {o}"))
            for a in adjs:
                out.append((domain, f"{p} {v} {a} {o}"))
    return out


def balanced_pick(rng, pool, n):
    by_label = {}
    for lab, s in pool:
        by_label.setdefault(lab, []).append((lab, s))
    per = n // len(by_label)
    picked = []
    for lab in sorted(by_label):
        picked += rng.sample(by_label[lab], per)
    rng.shuffle(picked)
    return picked


def rp_sentences(rng, n):
    seen, out = set(), []
    assert len(NOUNS) == 45 and len(VERBS) == 45
    while len(out) < n:
        a, b = rng.sample(NOUNS, 2)
        v = rng.choice(VERBS)
        lab = len(out) % 2
        s = f"{a} that {v} {b}" if lab == 0 else f"{a} that {b} {v}"
        if s in seen:
            continue
        seen.add(s)
        out.append((lab, s))
    rng.shuffle(out)
    return out


def write(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for lab, s in rows:
            f.write(f"{lab}\t{s}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data", help="output directory")
    ap.add_argument("--seed", type=int, default=2026)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(args.seed)
    mc = balanced_pick(rng, mc_sentences(), 100)
    write(out / "mc_train.tsv", mc[:70])
    write(out / "mc_test.tsv", mc[70:])

    rp = rp_sentences(rng, 105)
    write(out / "rp_train.tsv", rp[:74])
    write(out / "rp_test.tsv", rp[74:])


if __name__ == "__main__":
    main()
