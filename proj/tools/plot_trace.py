#!/usr/bin/env python3
"""Plot an iidetect CSV trace: outputs vs encoded outputs, and alarms."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def columns(df, prefix):
    return [c for c in df.columns if c.startswith(prefix + "_") and c[len(prefix) + 1:].isdigit()]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("--out", default="trace.png")
    ap.add_argument("--alpha", type=float, default=None, help="draw the threshold on the z panel")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    k = df["k"]
    fig, ax = plt.subplots(5, 1, figsize=(9, 13), sharex=True)

    for c in columns(df, "y"):
        ax[0].plot(k, df[c], label=c)
    ax[0].set_ylabel("y")
    ax[0].legend(loc="upper right", fontsize="small")

    for c in columns(df, "ytil"):
        ax[1].plot(k, df[c], label=c)
    ax[1].set_ylabel("encoded y")
    ax[1].legend(loc="upper right", fontsize="small")

    ax[2].plot(k, df["z"], label="z")
    ax[2].plot(k, df["zeta"], "--", label="zeta")
    if args.alpha is not None:
        ax[2].axhline(args.alpha, color="k", lw=0.8, label="alpha")
    ax[2].set_ylabel("distance")
    ax[2].legend(loc="upper right", fontsize="small")

    for c in columns(df, "atil"):
        ax[3].step(k, df[c], where="post", label=c)
    ax[3].set_ylabel("encoded alarm")
    ax[3].legend(loc="upper right", fontsize="small")

    ax[4].step(k, df["a"], where="post", label="a")
    ax[4].step(k, df["ahat"] + 0.05, where="post", ls=":", label="decoded (offset 0.05)")
    ax[4].set_ylim(-0.2, 1.3)
    ax[4].set_ylabel("alarm")
    ax[4].set_xlabel("k")
    ax[4].legend(loc="center right", fontsize="small")

    onset = df.loc[df["fault_active"] == 1, "k"]
    if len(onset):
        for a in ax:
            a.axvline(onset.iloc[0], color="r", lw=0.6)

    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
