#!/usr/bin/env python3
"""Build the dna and satimage benchmark files in LIBSVM format.

The LIBSVM repository is not always reachable, so both data sets are rebuilt
from copies of the original Statlog/UCI data that ship inside two PyPI wheels:

  * satimage: ``imbalanced-databases`` carries the original Statlog
    ``sat.trn`` (4435 rows) and ``sat.tst`` (2000 rows). Features are scaled
    to [-1, 1] with the per-feature min/max of the training file, and the same
    factors are applied to the test file (``svm-scale -l -1 -u 1`` then
    ``svm-scale -r``).
  * dna: ``keel-ds`` carries the UCI splice-junction sequences (3190 rows of
    60 nucleotides). Rows with ambiguous nucleotides are dropped, each
    nucleotide is expanded to three indicator features (A=100, C=010, G=001,
    T=000) and the classes are numbered EI=1, IE=2, N=3. The original Statlog
    2000/1186 split is not recoverable, so a fixed-seed permutation puts the
    first 2000 rows in the training file and the rest in the test file.

Usage: prepare_data.py [OUT_DIR] [--wheel-dir DIR]
"""

import argparse
import glob
import os
import subprocess
import tempfile
import zipfile

import numpy as np

DNA_SPLIT_SEED = 0
DNA_TRAIN_SIZE = 2000
NUCLEOTIDE_CODES = {"A": (1, 0, 0), "C": (0, 1, 0), "G": (0, 0, 1), "T": (0, 0, 0)}
DNA_CLASSES = {"EI": 1, "IE": 2, "N": 3}


def fetch_wheel(name, wheel_dir):
    hits = glob.glob(os.path.join(wheel_dir, name.replace("-", "_") + "-*.whl"))
    if not hits:
        subprocess.run(
            ["pip", "download", "--no-deps", "-q", "-d", wheel_dir, name], check=True
        )
        hits = glob.glob(os.path.join(wheel_dir, name.replace("-", "_") + "-*.whl"))
    return zipfile.ZipFile(sorted(hits)[-1])


def write_libsvm(path, labels, rows):
    with open(path, "w") as out:
        for label, row in zip(labels, rows):
            feats = " ".join(
                f"{j + 1}:{value:.6g}" for j, value in enumerate(row) if value != 0
            )
            out.write(f"{label} {feats}\n" if feats else f"{label}\n")


def build_satimage(wheel, out_dir):
    def load(member):
        text = wheel.read("imbalanced_databases/data/satimage/" + member).decode()
        table = np.array([[int(t) for t in line.split()] for line in text.splitlines() if line.strip()])
        return table[:, :-1].astype(float), table[:, -1]

    x_train, y_train = load("sat.trn.txt")
    x_test, y_test = load("sat.tst.txt")
    lo, hi = x_train.min(axis=0), x_train.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)

    def scale(x):
        return -1.0 + 2.0 * (x - lo) / span

    write_libsvm(os.path.join(out_dir, "satimage.scale"), y_train, scale(x_train))
    write_libsvm(os.path.join(out_dir, "satimage.scale.t"), y_test, scale(x_test))
    print(f"satimage: {len(y_train)} train / {len(y_test)} test")


def build_dna(wheel, out_dir):
    text = wheel.read("keel_ds/data/balanced/raw/splice.dat").decode()
    labels, rows = [], []
    for line in text.splitlines():
        if not line.strip() or line.startswith("@"):
            continue
        tokens = [t.strip() for t in line.split(",")]
        seq, cls = tokens[:-1], tokens[-1]
        if any(c not in NUCLEOTIDE_CODES for c in seq):
            continue
        rows.append([bit for c in seq for bit in NUCLEOTIDE_CODES[c]])
        labels.append(DNA_CLASSES[cls])
    order = np.random.default_rng(DNA_SPLIT_SEED).permutation(len(rows))
    train, test = order[:DNA_TRAIN_SIZE], order[DNA_TRAIN_SIZE:]
    write_libsvm(os.path.join(out_dir, "dna.scale"), [labels[i] for i in train], [rows[i] for i in train])
    write_libsvm(os.path.join(out_dir, "dna.scale.t"), [labels[i] for i in test], [rows[i] for i in test])
    print(f"dna: {len(train)} train / {len(test)} test")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", nargs="?", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    parser.add_argument("--wheel-dir", default=None)
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    wheel_dir = args.wheel_dir or tempfile.mkdtemp(prefix="wwsvm-wheels-")
    build_satimage(fetch_wheel("imbalanced-databases", wheel_dir), args.out_dir)
    build_dna(fetch_wheel("keel-ds", wheel_dir), args.out_dir)


if __name__ == "__main__":
    main()
