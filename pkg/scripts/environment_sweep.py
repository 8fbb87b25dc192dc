"""Score, episode length and ratio to threshold 4 across the 19 catalog environments.

Runs the full grid (four learners plus thresholds 1..10) unless ``--from-csv``
points at an earlier ``sweep.csv``. Writes ``sweep.csv``, ``ratios.csv`` and,
with matplotlib installed, ``score.png``, ``length.png`` and ``ratio.png``.

    python3 scripts/environment_sweep.py --out out/sweep
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from fogrl.harness import RL_METHODS, SweepConfig, SweepResult, sweep

THRESHOLDS = [f"thld:{t}" for t in range(1, 11)]


def plots(result: SweepResult, ratios: list, out: Path):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    envs = sorted({r.env for r in result.rows})
    policies = list(RL_METHODS) + [t for t in THRESHOLDS if t != "thld:10"]  # threshold 10 is off scale
    for field, fname, ylabel in (("mean_R", "score.png", "R"), ("mean_T", "length.png", "T")):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for p in policies:
            ys = [getattr(result.get(k, p), field) for k in envs]
            ax.plot(envs, ys, marker="o" if p in RL_METHODS else ".", lw=1.2 if p in RL_METHODS else 0.7, label=p)
        ax.set_xlabel("environment")
        ax.set_ylabel(ylabel)
        ax.set_xticks(envs)
        ax.legend(fontsize=6, ncol=2)
        fig.tight_layout()
        fig.savefig(out / fname, dpi=150)
        plt.close(fig)
    fig, ax = plt.subplots(figsize=(8, 4))
    for p in RL_METHODS:
        ax.plot(envs, [d["ratio"] for d in ratios if d["policy"] == p], marker="o", label=p)
    ax.axhline(1.0, color="k", lw=0.5)
    ax.set_xlabel("environment")
    ax.set_ylabel("R / R(thld:4)")
    ax.set_xticks(envs)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "ratio.png", dpi=150)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--episodes", type=int, default=10_000, help="evaluation episodes per cell")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--from-csv", dest="from_csv")
    ap.add_argument("--out", default="out/sweep")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.from_csv:
        result = SweepResult.from_csv(Path(args.from_csv).read_text())
    else:
        cfg = SweepConfig(episodes=args.episodes)
        result = sweep(range(1, 20), list(RL_METHODS) + THRESHOLDS, cfg, root_seed=args.seed, jobs=args.jobs)
        (out / "sweep.csv").write_text(result.to_csv())
    ratios = result.ratio_table("thld:4")
    with open(out / "ratios.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["env", "policy", "ratio"])
        w.writerows((d["env"], d["policy"], repr(d["ratio"])) for d in ratios)
    plots(result, ratios, out)

    envs = sorted({r.env for r in result.rows})
    print("env   " + " ".join(f"{p:>8s}" for p in RL_METHODS) + "   best threshold")
    for k in envs:
        best = max(THRESHOLDS, key=lambda t: result.get(k, t).mean_R)
        cells = " ".join(f"{result.get(k, p).mean_R:8.2f}" for p in RL_METHODS)
        print(f"E{k:<4d} {cells}   {best} ({result.get(k, best).mean_R:.2f})")
    for p in RL_METHODS:
        vals = [d["ratio"] for d in ratios if d["policy"] == p]
        print(f"{p}: mean ratio to thld:4 = {np.nanmean(vals):.4f}, mean T = "
              f"{np.mean([result.get(k, p).mean_T for k in envs]):.1f}")


if __name__ == "__main__":
    main()
