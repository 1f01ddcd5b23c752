"""Bar chart of mean SLNR per fault pattern and method from patterns.csv."""
import sys

import matplotlib.pyplot as plt
import pandas as pd


def main(path="out/patterns.csv", dest="patterns.png"):
    df = pd.read_csv(path)
    table = df.pivot(index="pattern", columns="method", values="mean_slnr_db")
    ax = table.plot.bar(figsize=(8, 4), rot=0)
    ax.set_ylabel("SLNR (dB)")
    ax.grid(True, axis="y")
    ax.figure.tight_layout()
    ax.figure.savefig(dest)


if __name__ == "__main__":
    main(*sys.argv[1:])
