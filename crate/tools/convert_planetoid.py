#!/usr/bin/env python3
"""Convert the public Planetoid citation files into the TSV tables used here.

Expects the eight raw files distributed by the Planetoid project for one
dataset (ind.<name>.x, .y, .tx, .ty, .allx, .ally, .graph, .test.index)
and writes edges.tsv, features.tsv, labels.tsv, and split.tsv:

    python3 tools/convert_planetoid.py --input raw/ --name cora --out data/cora

Node order matches the standard loaders: the allx block first, then the
test block with its rows permuted back to the positions recorded in
ind.<name>.test.index. The split takes the first len(y) nodes for
training, the next 500 for validation, and the test.index nodes for
testing. Isolated test documents missing from the raw blocks (citeseer
has a few) become zero-feature, unlabeled nodes outside every split.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

SUFFIXES = ["x", "y", "tx", "ty", "allx", "ally", "graph"]


def load_raw(input_dir: Path, name: str):
    objects = {}
    for suffix in SUFFIXES:
        path = input_dir / f"ind.{name}.{suffix}"
        if not path.is_file():
            sys.exit(f"missing {path}")
        with path.open("rb") as f:
            objects[suffix] = pickle.load(f, encoding="latin1")
    index_path = input_dir / f"ind.{name}.test.index"
    if not index_path.is_file():
        sys.exit(f"missing {index_path}")
    test_index = np.array([int(line) for line in index_path.read_text().split()])
    return objects, test_index


def assemble(objects, test_index):
    allx, ally = objects["allx"], objects["ally"]
    tx, ty = objects["tx"], objects["ty"]
    order = np.sort(test_index)

    base = order.min()
    if base != allx.shape[0]:
        sys.exit(
            f"test indices start at {base} but the allx block has "
            f"{allx.shape[0]} rows; these raw files do not line up"
        )
    span = order.max() - base + 1
    if span != len(order):
        # Pad the gaps so stacked row i is document i for every test index.
        tx_full = sp.lil_matrix((span, allx.shape[1]), dtype=allx.dtype)
        tx_full[order - base] = tx
        tx = tx_full.tocsr()
        ty_full = np.zeros((span, ally.shape[1]), dtype=ty.dtype)
        ty_full[order - base] = ty
        ty = ty_full

    # The raw test block is stored in test.index order; swap rows so every
    # document sits at its own index.
    features = sp.vstack([allx, tx]).tolil()
    features[test_index] = features[order]
    labels_onehot = np.vstack([ally, ty])
    labels_onehot[test_index] = labels_onehot[order]

    num_train = objects["y"].shape[0]
    if num_train + 500 > base:
        sys.exit(
            f"validation range {num_train}..{num_train + 500} would run into "
            f"the test block starting at {base}"
        )
    split = {
        "train": np.arange(num_train),
        "val": np.arange(num_train, num_train + 500),
        "test": order,
    }
    return features.tocsr(), labels_onehot, split


def write_edges(path: Path, graph, n: int):
    edges = set()
    dropped = 0
    for u, neighbors in graph.items():
        for v in neighbors:
            if u == v:
                dropped += 1
            else:
                edges.add((min(u, v), max(u, v)))
    with path.open("w") as f:
        f.write(f"# nodes: {n}\n")
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")
    return len(edges), dropped


def write_features(path: Path, features):
    n, cols = features.shape
    zero_row = ["0.0"] * cols
    with path.open("w") as f:
        for i in range(n):
            row = zero_row.copy()
            start, end = features.indptr[i], features.indptr[i + 1]
            for j, v in zip(features.indices[start:end], features.data[start:end]):
                row[j] = repr(float(v))
            f.write(str(i) + "\t" + "\t".join(row) + "\n")


def write_labels(path: Path, labels_onehot):
    with path.open("w") as f:
        for i, row in enumerate(labels_onehot):
            if row.any():
                f.write(f"{i}\t{int(row.argmax())}\n")


def write_split(path: Path, split):
    with path.open("w") as f:
        for role in ("train", "val", "test"):
            for i in split[role]:
                f.write(f"{int(i)}\t{role}\n")


def main():
    ap = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    ap.add_argument(
        "--input", required=True, type=Path, help="directory holding the ind.<name>.* files"
    )
    ap.add_argument("--name", required=True, choices=["cora", "citeseer", "pubmed"])
    ap.add_argument("--out", required=True, type=Path, help="output dataset directory")
    args = ap.parse_args()

    objects, test_index = load_raw(args.input, args.name)
    features, labels_onehot, split = assemble(objects, test_index)
    n = features.shape[0]
    graph = objects["graph"]
    if max(graph) >= n or any(v >= n for vs in graph.values() for v in vs):
        sys.exit("graph references nodes outside the feature table")

    args.out.mkdir(parents=True, exist_ok=True)
    num_edges, dropped = write_edges(args.out / "edges.tsv", graph, n)
    write_features(args.out / "features.tsv", features)
    write_labels(args.out / "labels.tsv", labels_onehot)
    write_split(args.out / "split.tsv", split)

    labeled = int(labels_onehot.any(axis=1).sum())
    print(
        f"{args.name}: {n} nodes, {num_edges} edges ({dropped} self-loops dropped), "
        f"{labels_onehot.shape[1]} classes, {labeled} labeled, "
        f"{len(split['train'])}/{len(split['val'])}/{len(split['test'])} train/val/test"
    )


if __name__ == "__main__":
    main()
