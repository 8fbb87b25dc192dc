"""Learning curves in one environment: MC state values and QL action values per episode.

Writes ``mc_values.csv`` (episode, then one column per tracked state) and
``ql_serve.csv`` / ``ql_reject.csv`` with the same layout, plus PNG plots when
matplotlib is installed. The oracle values are appended as a final row
labelled ``oracle``.

    python3 scripts/value_traces.py --env 7 --episodes 20000 --out out/traces
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from fogrl.agents import AgentConfig, ConvergenceSpec, mc_train, td_train, value_iteration
from fogrl.envs import catalog, child_rng
from fogrl.harness import policy_key
from fogrl.mdp import MdpConfig, RewardScheme, encode_state

# 16 tracked states: four occupancy levels by four utility levels
TRACKED = [(b, u) for b in (0, 5, 10, 14) for u in (1, 4, 7, 10)]


def record(path, rows, header):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def plot(path, series, oracle, labels, ylabel):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, ax = plt.subplots(figsize=(7, 4.5))
    x = np.arange(1, series.shape[0] + 1)
    for j, label in enumerate(labels):
        line, = ax.plot(x, series[:, j], lw=0.8, label=label)
        ax.axhline(oracle[j], color=line.get_color(), ls=":", lw=0.6)
    ax.set_xscale("log")
    ax.set_xlabel("episode")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=6, ncol=4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--env", type=int, default=7)
    ap.add_argument("--episodes", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/traces")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    env, mdp = catalog(args.env), MdpConfig()
    sch = RewardScheme(u_high=env.u_bar)
    idx = [encode_state(b, u, mdp.U) - 1 for b, u in TRACKED]
    labels = [f"s{i + 1}" for i in idx]
    oracle = value_iteration(env, sch, mdp)
    # run to the full budget so the curves show the whole horizon
    stop = ConvergenceSpec(window=None, max_episodes=args.episodes)

    v_rows = []
    _, mc_trace = mc_train(env, AgentConfig("mc"), sch, mdp, stop, child_rng(args.seed, args.env, policy_key("mc"), 0),
                           on_episode=lambda e, v: v_rows.append(v[idx]))
    v = np.array(v_rows)
    record(out / "mc_values.csv", [[e + 1, *row] for e, row in enumerate(v.tolist())]
           + [["oracle", *oracle.values.values[idx].tolist()]], ["episode", *labels])
    plot(out / "mc_values.png", v, oracle.values.values[idx], labels, "V(s)")

    q_rows = []
    _, ql_trace = td_train(env, AgentConfig("ql"), sch, mdp, stop, child_rng(args.seed, args.env, policy_key("ql"), 0),
                           on_episode=lambda e, q: q_rows.append(q[idx]))
    q = np.array(q_rows)
    for a, name in ((1, "serve"), (0, "reject")):
        record(out / f"ql_{name}.csv", [[e + 1, *row] for e, row in enumerate(q[:, :, a].tolist())]
               + [["oracle", *oracle.q.q[idx, a].tolist()]], ["episode", *labels])
        plot(out / f"ql_{name}.png", q[:, :, a], oracle.q.q[idx, a], labels, f"Q(s, {name})")

    for name, trace in (("mc", mc_trace), ("ql", ql_trace)):
        d = np.array(trace.deltas)
        below = np.flatnonzero(d < 0.01)
        print(f"{name}: {trace.episodes} episodes, first per-episode delta < 0.01 at "
              f"{below[0] + 1 if below.size else None}, final delta {d[-1]:.2e}")
    print(f"max |V_mc - V*| on tracked states: {np.max(np.abs(v[-1] - oracle.values.values[idx])):.3f}")
    print(f"wrote traces to {out}")


if __name__ == "__main__":
    main()
