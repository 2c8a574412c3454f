#!/usr/bin/env python3
"""Rebuild UCI-layout data files from locally installed Python packages.

For hosts without access to archive.ics.uci.edu. Writes the same
`<dest>/<dataset>/<file>` layout that `marcsinh-bench fetch` produces, so
the loaders and the manifest are exercised unchanged.

Sources:
  iris, wdbc, wine   -> scikit-learn's bundled CSV copies
  optdigits, digits  -> keel_ds `optdigits.dat`, which is optdigits.tra
                        (3823 rows) followed by optdigits.tes (1797 rows);
                        the tail is checked against scikit-learn's digits.

Datasets with no offline source (heart_failure, parkinsons, haberman,
spectf, german, pendigits, wifi, coimbra) are reported and skipped.
"""
import argparse
import csv
import gzip
import os
import sys


def sk_data_dir():
    import sklearn.datasets

    return os.path.join(os.path.dirname(sklearn.datasets.__file__), "data")


def read_sk_csv(name):
    with open(os.path.join(sk_data_dir(), name)) as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return header[2:], body


def write(dest, dataset, fname, lines):
    d = os.path.join(dest, dataset)
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, fname)
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line + "\n")
    print(f"wrote {path} ({len(lines)} rows)")


def iris(dest):
    names, body = read_sk_csv("iris.csv")
    lines = [",".join(r[:-1] + ["Iris-" + names[int(r[-1])]]) for r in body]
    write(dest, "iris", "iris.data", lines)


def wdbc(dest):
    _, body = read_sk_csv("breast_cancer.csv")
    # the UCI id column is not bundled; the row index stands in for it
    lines = [
        ",".join([str(i + 1), "M" if r[-1] == "0" else "B"] + r[:-1])
        for i, r in enumerate(body)
    ]
    write(dest, "wdbc", "wdbc.data", lines)


def wine(dest):
    _, body = read_sk_csv("wine_data.csv")
    lines = [",".join([str(int(r[-1]) + 1)] + r[:-1]) for r in body]
    write(dest, "wine", "wine.data", lines)


def optdigits(dest):
    import keel_ds

    path = os.path.join(
        os.path.dirname(keel_ds.__file__), "data", "balanced", "raw", "optdigits.dat"
    )
    rows = [
        l.strip()
        for l in open(path)
        if l.strip() and not l.startswith("@")
    ]
    if len(rows) != 5620:
        sys.exit(f"unexpected optdigits row count {len(rows)}")
    tra, tes = rows[:3823], rows[3823:]
    with gzip.open(os.path.join(sk_data_dir(), "digits.csv.gz"), "rt") as fh:
        sk = [",".join(str(int(float(v))) for v in l.strip().split(",")) for l in fh if l.strip()]
    if sk != tes:
        sys.exit("optdigits tail does not match scikit-learn digits; refusing to write")
    write(dest, "optdigits", "optdigits.tra", tra)
    write(dest, "optdigits", "optdigits.tes", tes)
    write(dest, "digits", "optdigits.tes", tes)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dest", default="data")
    args = ap.parse_args()
    for f in (iris, wdbc, wine, optdigits):
        f(args.dest)
    for name in ("heart_failure", "parkinsons", "haberman", "spectf", "german",
                 "pendigits", "wifi", "coimbra"):
        print(f"no offline source for {name}; run `marcsinh-bench fetch` on a networked host")


if __name__ == "__main__":
    main()
