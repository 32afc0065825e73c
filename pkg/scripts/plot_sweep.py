"""Plot the ratio -log p_hat / M(u; T) against u from one or more sweep.csv files.

    python3 scripts/plot_sweep.py out/sweep.csv [more.csv ...] -o ratio.png
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_rows(path):
    with open(path) as fh:
        rows = [r for r in csv.DictReader(fh) if r["ratio"]]
    return [float(r["u"]) for r in rows], [float(r["ratio"]) for r in rows]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--output", default="ratio.png")
    args = ap.parse_args(argv)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for path in args.csv:
        u, ratio = read_rows(path)
        ax.plot(u, ratio, "o-", label=path)
    ax.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("u")
    ax.set_ylabel("-log p_hat / M(u; T)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
