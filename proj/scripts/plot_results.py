#!/usr/bin/env python3
"""Render figures from a gaitclone workdir.

Reads the tidy CSVs the pipeline emits and writes PNGs next to them:
  loss_curves.png     train/val L1 across both stages (models/train_curves.csv)
  torque_overlay.png  demonstrator vs clones, first 20 s of the test file
                      (eval/torque_traces.csv)
  phase_portraits.png knee/ankle limit cycles per run (runs/*.csv)
  rmse_table.csv      tracking RMSE per {controller} x {slope} (runs/*_metrics.ini)
"""

import argparse
import configparser
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    """CSV with optional leading '# ...' comment lines; returns (header, columns)."""
    with open(path) as f:
        rows = [r for r in csv.reader(f) if r and not r[0].lstrip().startswith("#")]
    header = [h.strip() for h in rows[0]]
    cols = {h: [] for h in header}
    for row in rows[1:]:
        for h, v in zip(header, row):
            cols[h].append(float(v) if h != "stage" else v.strip())
    return header, cols


def plot_losses(workdir, outdir):
    path = workdir / "models" / "train_curves.csv"
    if not path.exists():
        return None
    _, cols = read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    stages = cols["stage"]
    split = stages.index("retrain") if "retrain" in stages else len(stages)
    epochs = list(range(1, len(stages) + 1))
    ax.semilogy(epochs, cols["train_loss"], label="train L1", color="tab:blue")
    ax.semilogy(epochs, cols["val_loss"], label="val L1", color="tab:orange")
    if split < len(stages):
        ax.axvline(split + 0.5, color="gray", ls="--", lw=1)
        ax.text(split + 1, max(cols["val_loss"]), "delta retrain", fontsize=9)
    ax.set_xlabel("epoch")
    ax.set_ylabel("L1 loss (N*m)")
    ax.legend()
    fig.tight_layout()
    out = outdir / "loss_curves.png"
    fig.savefig(out, dpi=130)
    return out


def plot_torque_overlay(workdir, outdir):
    path = workdir / "eval" / "torque_traces.csv"
    if not path.exists():
        return None
    _, cols = read_csv(path)
    fig, axes = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    for ax, joint in zip(axes, ("knee", "ankle")):
        ax.plot(cols["t"], cols[f"tau_pd_{joint}"], label="demonstrator",
                color="black", lw=1.2)
        ax.plot(cols["t"], cols[f"tau_float_{joint}"], label="GRU clone",
                color="tab:blue", lw=0.9, alpha=0.8)
        ax.plot(cols["t"], cols[f"tau_engine_{joint}"], label="fixed-point engine",
                color="tab:red", lw=0.9, alpha=0.8, ls=":")
        ax.set_ylabel(f"{joint} torque (N*m)")
    axes[0].legend(ncol=3, fontsize=9)
    axes[1].set_xlabel("t (s)")
    fig.tight_layout()
    out = outdir / "torque_overlay.png"
    fig.savefig(out, dpi=130)
    return out


def plot_phase_portraits(workdir, outdir):
    runs = sorted((workdir / "runs").glob("*.csv"))
    if not runs:
        return None
    fig, axes = plt.subplots(2, len(runs), figsize=(3.2 * len(runs), 6),
                             squeeze=False, sharex="row", sharey="row")
    for j, run in enumerate(runs):
        _, cols = read_csv(run)
        skip = len(cols["t"]) // 6  # drop the transient before the limit cycle
        for i, joint in enumerate(("pk", "pa")):
            ax = axes[i][j]
            ax.plot(cols[f"th_a_{joint}"][skip:], cols[f"dth_a_{joint}"][skip:],
                    lw=0.5, color="tab:blue")
            if i == 0:
                ax.set_title(run.stem, fontsize=9)
        axes[0][j].set_xlabel("knee angle (rad)")
        axes[1][j].set_xlabel("ankle angle (rad)")
    axes[0][0].set_ylabel("knee velocity (rad/s)")
    axes[1][0].set_ylabel("ankle velocity (rad/s)")
    fig.tight_layout()
    out = outdir / "phase_portraits.png"
    fig.savefig(out, dpi=130)
    return out


def rmse_table(workdir, outdir):
    metrics = sorted((workdir / "runs").glob("*_metrics.ini"))
    if not metrics:
        return None
    out = outdir / "rmse_table.csv"
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["controller", "slope", "rmse_knee", "rmse_ankle",
                    "strides", "diverged"])
        for path in metrics:
            ini = configparser.ConfigParser()
            ini.read(path)
            w.writerow([ini["run"]["controller"], ini["run"]["slope"],
                        ini["metrics"]["rmse_knee"], ini["metrics"]["rmse_ankle"],
                        ini["metrics"]["strides"], ini["metrics"]["diverged"]])
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("workdir", type=Path, help="pipeline workdir")
    ap.add_argument("--out", type=Path, default=None,
                    help="output directory (default: <workdir>/plots)")
    args = ap.parse_args()
    outdir = args.out or args.workdir / "plots"
    outdir.mkdir(parents=True, exist_ok=True)

    made = [p for p in (plot_losses(args.workdir, outdir),
                        plot_torque_overlay(args.workdir, outdir),
                        plot_phase_portraits(args.workdir, outdir),
                        rmse_table(args.workdir, outdir)) if p]
    if not made:
        sys.exit(f"no plottable artifacts under {args.workdir}")
    for p in made:
        print(p)


if __name__ == "__main__":
    main()
