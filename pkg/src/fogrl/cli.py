"""Command-line front end: ``fogrl {train,evaluate,sweep,oracle}``.

Every command takes an optional JSON config file (``--config``) whose keys are
the fields of :class:`RunConfig`; flags override file values. The effective
configuration is echoed into the output bundle.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import json
import logging
import re
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from fogrl import __version__
from fogrl.agents.base import AgentConfig, ConvergenceSpec
from fogrl.agents.mc import mc_train
from fogrl.agents.oracle import gap_report, q_from_values, value_iteration
from fogrl.agents.policies import ThresholdPolicy, mc_decision_grid
from fogrl.agents.tables import QTable, ValueTable, load_table, save_table
from fogrl.agents.td import td_train
from fogrl.envs import EnvironmentPMF, build_environment, catalog, child_rng, published
from fogrl.harness import (
    EVAL_KEY,
    SweepConfig,
    estimate_R,
    policy_key,
    sweep,
)
from fogrl.mdp import MdpConfig, RewardScheme

log = logging.getLogger("fogrl")


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        super().__init__(msg)
        self.line = line


@dataclass
class RunConfig:
    method: str = "ql"
    env: int | None = 7
    rho: float | None = None
    env_file: str | None = None
    N: int = 15
    U: int = 10
    gamma: float = 0.7
    alpha: float = 0.01
    epsilon: float = 0.0
    nstep: int = 1
    first_visit: bool = False
    r_sh: float = 2.0
    r_sl: float = -1.0
    r_rh: float = -2.0
    r_rl: float = 1.0
    u_high: float | str = "mean"
    theta: float = 1.0
    threshold: int | None = None
    table: str | None = None
    train_episodes: int = 20000
    eval_episodes: int = 10000
    window: int = 500
    tol: float = 0.01
    seed: int = 0
    seeds: int = 1
    envs: str = "1-19"
    policies: str = "ql,esarsa,sarsa,mc,thld:1-10"
    baseline: str = "thld:4"
    jobs: int = 1
    out: str = "out"

    # --- derived objects -------------------------------------------------

    def environment(self) -> EnvironmentPMF:
        if self.env_file:
            return EnvironmentPMF.load(self.env_file)
        if self.rho is not None:
            return build_environment(self.rho, published(7))
        if self.env is None:
            raise ConfigError("no environment selected (env, rho or env_file)")
        return catalog(self.env)

    def env_label(self) -> str:
        if self.env_file:
            return Path(self.env_file).stem
        if self.rho is not None:
            return f"rho{self.rho:g}"
        return f"e{self.env}"

    def env_key(self) -> int:
        return self.env if (self.env and not self.env_file and self.rho is None) else 0

    def mdp(self) -> MdpConfig:
        return MdpConfig(self.N, self.U, self.gamma)

    def agent(self) -> AgentConfig:
        return AgentConfig(self.method, self.gamma, self.alpha, self.epsilon, self.nstep, self.first_visit)

    def stop(self) -> ConvergenceSpec:
        return ConvergenceSpec(self.window, self.tol, self.train_episodes)

    def scheme(self, env: EnvironmentPMF) -> RewardScheme:
        return RewardScheme(self.r_sh, self.r_sl, self.r_rh, self.r_rl, self.resolved_u_high(env))

    def resolved_u_high(self, env: EnvironmentPMF) -> float:
        return env.u_bar if self.u_high == "mean" else float(self.u_high)

    def validate(self, text: str | None = None) -> None:
        """Build every component once so invariant violations surface before any compute."""
        def fail(key, exc):
            raise ConfigError(f"{key}: {exc}", _line_of(text, key)) from exc

        for keys, build in ((("N", "U", "gamma"), self.mdp),
                            (("method", "alpha", "epsilon", "nstep", "gamma"), self.agent),
                            (("window", "tol", "train_episodes"), self.stop)):
            try:
                build()
            except ValueError as exc:
                named = [k for k in keys if re.search(rf"\b{k}\b", str(exc))]
                fail((named or keys)[0], exc)
        try:
            env = self.environment()
        except (ValueError, OSError, KeyError) as exc:
            fail("env", exc)
        if env.U != self.U:
            fail("U", ValueError(f"environment has {env.U} levels, config has U={self.U}"))
        if self.u_high != "mean":
            try:
                float(self.u_high)
            except (TypeError, ValueError) as exc:
                fail("u_high", exc)
        if self.threshold is not None and not 1 <= self.threshold <= self.U:
            fail("threshold", ValueError(f"threshold must lie in 1..{self.U}"))
        if self.eval_episodes < 1:
            fail("eval_episodes", ValueError("must be >= 1"))
        if self.theta < 0:
            fail("theta", ValueError("idle penalty must be nonnegative"))

    def echo(self, env: EnvironmentPMF | None = None) -> dict:
        d = dataclasses.asdict(self)
        if env is not None:
            d["u_high"] = self.resolved_u_high(env)
        return d

    def table_header(self, env: EnvironmentPMF) -> dict:
        # where a table is written does not affect its contents
        return {k: v for k, v in self.echo(env).items() if k != "out"}


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    for i, line in enumerate(text.splitlines(), 1):
        if re.search(rf'"{re.escape(key)}"\s*:', line):
            return i
    return None


def load_config(path: str | Path) -> tuple[dict, str]:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", 1)
    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", _line_of(text, key))
    return data, text


def expand_list(spec: str) -> list[str]:
    """``"1-3,7"`` -> ``["1","2","3","7"]``; ``"thld:1-3"`` -> ``["thld:1","thld:2","thld:3"]``."""
    out = []
    for part in filter(None, (p.strip() for p in spec.split(","))):
        prefix, _, body = part.rpartition(":")
        prefix = prefix + ":" if prefix else ""
        m = re.fullmatch(r"(\d+)-(\d+)", body)
        if m:
            out.extend(f"{prefix}{i}" for i in range(int(m[1]), int(m[2]) + 1))
        else:
            out.append(part)
    return out


# --- output helpers ---------------------------------------------------------

def _write_csv(path: Path, header, rows, append=False):
    new = not (append and path.exists())
    with path.open("a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else x


def _bundle(cfg: RunConfig, env: EnvironmentPMF, **payload) -> dict:
    return {
        "config": cfg.echo(env),
        "environment": env.to_record(),
        **payload,
        "provenance": {
            "seed": cfg.seed,
            "version": __version__,
            "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        },
    }


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=1, default=_fmt) + "\n", encoding="utf-8")


# --- commands ---------------------------------------------------------------

def cmd_train(cfg: RunConfig) -> dict:
    env, mdp, agent = cfg.environment(), cfg.mdp(), cfg.agent()
    scheme = cfg.scheme(env)
    rng = child_rng(cfg.seed, cfg.env_key(), policy_key(cfg.method), 0)
    if agent.method == "mc":
        table, trace = mc_train(env, agent, scheme, mdp, cfg.stop(), rng)
    else:
        table, trace = td_train(env, agent, scheme, mdp, cfg.stop(), rng)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.method}_{cfg.env_label()}"
    save_table(out / f"{stem}.table", table, cfg.method, cfg.table_header(env))
    _write_csv(out / f"{stem}_trace.csv", ["episode", "max_delta"], [(e, _fmt(d)) for e, d in trace.to_csv_rows()])
    bundle = _bundle(
        cfg, env,
        table_file=f"{stem}.table",
        trace_file=f"{stem}_trace.csv",
        converged=trace.converged,
        converged_episode=trace.converged_episode,
        episodes=trace.episodes,
        steps=trace.steps,
    )
    _write_json(out / f"{stem}_bundle.json", bundle)
    status = f"converged at episode {trace.converged_episode}" if trace.converged else "not converged"
    print(f"{cfg.method} on {env.name}: {trace.episodes} episodes, {trace.steps} steps, {status}")
    return bundle


def _policy_from_table(path: str, cfg: RunConfig, env: EnvironmentPMF, mdp: MdpConfig):
    table, header = load_table(path, mdp)
    if isinstance(table, QTable):
        return table, header
    scheme = cfg.scheme(env)
    return mc_decision_grid(table, scheme, env.probs, mdp.gamma), header


def cmd_evaluate(cfg: RunConfig) -> dict:
    env, mdp = cfg.environment(), cfg.mdp()
    scheme = cfg.scheme(env)
    if cfg.table:
        policy, _ = _policy_from_table(cfg.table, cfg, env, mdp)
        label = Path(cfg.table).stem
    elif cfg.threshold is not None:
        policy, label = ThresholdPolicy(cfg.threshold, mdp.U), f"thld:{cfg.threshold}"
    else:
        raise ConfigError("evaluate needs --table or --threshold")
    rng = child_rng(cfg.seed, cfg.env_key(), EVAL_KEY, 0)
    rep = estimate_R(policy, env, mdp, scheme, cfg.theta, cfg.eval_episodes, rng)
    print(f"{label} on {env.name}: mean_R={rep.mean_R:.4f} ci95={rep.ci95_R:.4f} mean_T={rep.mean_T:.4f}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "evaluate.csv",
        ["env", "rho", "policy", "seed", "episodes", "theta", "mean_R", "ci95_R", "mean_T"],
        [(env.name, _fmt(env.rho), label, cfg.seed, rep.episodes, _fmt(rep.theta),
          _fmt(rep.mean_R), _fmt(rep.ci95_R), _fmt(rep.mean_T))],
        append=True,
    )
    return dataclasses.asdict(rep)


def cmd_sweep(cfg: RunConfig):
    envs = [int(k) for k in expand_list(cfg.envs)]
    policies = expand_list(cfg.policies)
    scfg = SweepConfig(
        mdp=cfg.mdp(), r_sh=cfg.r_sh, r_sl=cfg.r_sl, r_rh=cfg.r_rh, r_rl=cfg.r_rl,
        u_high=cfg.u_high, agent=cfg.agent(), stop=cfg.stop(), theta=cfg.theta,
        episodes=cfg.eval_episodes, seeds=cfg.seeds,
    )
    result = sweep(envs, policies, scfg, cfg.seed, cfg.jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(result.to_csv(), encoding="utf-8")
    (out / "sweep.json").write_text(result.to_json(), encoding="utf-8")
    ratios = result.ratio_table(cfg.baseline)
    _write_csv(out / "ratios.csv", ["env", "policy", "ratio_vs_" + cfg.baseline],
               [(r["env"], r["policy"], _fmt(r["ratio"])) for r in ratios])
    failed = [r for r in result.rows if r.status != "ok"]
    print(f"sweep: {len(result.rows)} rows ({len(failed)} failed) -> {out / 'sweep.csv'}")
    for p in policies:
        vals = [r["ratio"] for r in ratios if r["policy"] == p and not np.isnan(r["ratio"])]
        if vals and p != cfg.baseline:
            print(f"  {p:>8s} / {cfg.baseline}: mean ratio {np.nanmean(vals):.4f}")
    return result


def cmd_oracle(cfg: RunConfig) -> dict:
    env, mdp = cfg.environment(), cfg.mdp()
    scheme = cfg.scheme(env)
    sol = value_iteration(env, scheme, mdp)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"oracle_{cfg.env_label()}"
    save_table(out / f"{stem}_v.table", sol.values, "oracle", cfg.table_header(env))
    save_table(out / f"{stem}_q.table", sol.q, "oracle", cfg.table_header(env))
    _write_csv(out / f"{stem}_trace.csv", ["sweep", "max_delta"], [(i + 1, _fmt(d)) for i, d in enumerate(sol.deltas)])
    doc = {"sweeps": sol.sweeps, "final_delta": sol.deltas[-1]}
    if cfg.table:
        learned, _ = load_table(cfg.table, mdp)
        if isinstance(learned, ValueTable):
            learned = q_from_values(learned, env, scheme, mdp.gamma)
        doc["gap"] = gap_report(learned, sol.q, env)
        print(f"greedy agreement {doc['gap']['agreement']:.4f} on {doc['gap']['states']} states, "
              f"Q gap {doc['gap']['q_gap']:.4g}")
    _write_json(out / f"{stem}_report.json", doc)
    print(f"oracle on {env.name}: {sol.sweeps} sweeps, final delta {sol.deltas[-1]:.3g}")
    return doc


COMMANDS = {"train": cmd_train, "evaluate": cmd_evaluate, "sweep": cmd_sweep, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogrl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--method", choices=["mc", "ql", "esarsa", "sarsa"])
        p.add_argument("--env", type=int, help="catalog index 1..19")
        p.add_argument("--rho", type=float, help="custom environment with P(u>5)=rho")
        p.add_argument("--env-file", dest="env_file")
        p.add_argument("--N", type=int)
        p.add_argument("--U", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--nstep", type=int)
        p.add_argument("--theta", type=float)
        p.add_argument("--u-high", dest="u_high", help='number or "mean"')
        p.add_argument("--threshold", type=int)
        p.add_argument("--table")
        p.add_argument("--episodes", type=int,
                       help="training budget for train, evaluation episodes otherwise")
        p.add_argument("--train-episodes", dest="train_episodes", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if name == "sweep":
            p.add_argument("--envs")
            p.add_argument("--policies")
            p.add_argument("--seeds", type=int)
            p.add_argument("--baseline")
            p.add_argument("--jobs", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values, text = ({}, None)
    if args.config:
        values, text = load_config(args.config)
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command", "episodes")}
    if args.episodes is not None:
        flags["train_episodes" if args.command == "train" else "eval_episodes"] = args.episodes
    if flags.get("rho") is not None or flags.get("env_file") is not None:
        values.pop("env", None)
        flags.setdefault("env", None)
    if "u_high" in flags and flags["u_high"] != "mean":
        flags["u_high"] = float(flags["u_high"])
    values.update(flags)
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate(text)
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        where = f"{args.config}:{exc.line}: " if exc.line else (f"{args.config}: " if args.config else "")
        print(f"error: {where}{exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
