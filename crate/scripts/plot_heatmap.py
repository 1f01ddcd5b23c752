"""Render heatmap_<method>.csv as a dBm image, with the fault mask as an inset."""
import sys

import matplotlib.pyplot as plt
import pandas as pd


def main(path="out/heatmap_max_slnr.csv", mask="out/mask.csv", dest="heatmap.png"):
    df = pd.read_csv(path)
    grid = df.pivot(index="y_m", columns="x_m", values="power_dbm")
    fig, (ax, inset) = plt.subplots(1, 2, figsize=(10, 4), gridspec_kw={"width_ratios": [3, 1]})
    im = ax.imshow(
        grid.values,
        origin="lower",
        extent=[grid.columns.min(), grid.columns.max(), grid.index.min(), grid.index.max()],
        aspect="equal",
    )
    fig.colorbar(im, ax=ax, label="power (dBm)")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    m = pd.read_csv(mask).pivot(index="iy", columns="ix", values="faulty")
    inset.imshow(m.values, origin="lower", cmap="Reds")
    inset.set_title("faulty elements")
    fig.tight_layout()
    fig.savefig(dest)


if __name__ == "__main__":
    main(*sys.argv[1:])
