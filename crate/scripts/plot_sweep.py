"""Plot mean SLNR and SNR against the number of faulty elements from sweep.csv."""
import sys

import matplotlib.pyplot as plt
import pandas as pd


def main(path="out/sweep.csv", dest="sweep.png"):
    df = pd.read_csv(path)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for method, rows in df.groupby("method"):
        axes[0].plot(rows.fault_count, rows.mean_slnr_db, marker="o", label=method)
        axes[1].plot(rows.fault_count, rows.mean_snr_db, marker="o", label=method)
    axes[0].set_ylabel("SLNR (dB)")
    axes[1].set_ylabel("SNR (dB)")
    for ax in axes:
        ax.set_xlabel("faulty elements")
        ax.grid(True)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(dest)


if __name__ == "__main__":
    main(*sys.argv[1:])
