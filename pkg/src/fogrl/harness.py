"""Evaluation of admission policies and sweeps over the environment catalog.

The score of one episode is the total utility served minus ``theta`` times the
number of rejected requests (idle time ``T - M``). Policies are evaluated frozen
and deterministic; every policy evaluated in the same (environment, seed) cell
sees the same utility sequence.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from fogrl.agents.base import AgentConfig, ConvergenceSpec
from fogrl.agents.mc import mc_train
from fogrl.agents.policies import ThresholdPolicy, decision_table, mc_decision_grid
from fogrl.agents.td import td_train
from fogrl.envs import EnvironmentPMF, UtilityStream, catalog, child_rng
from fogrl.mdp import Action, MdpConfig, RewardScheme, Transition, step

log = logging.getLogger(__name__)

# second spawn-key component for evaluation streams, shared by all policies
EVAL_KEY = 0
RL_METHODS = ("ql", "esarsa", "sarsa", "mc")


@dataclass
class EpisodeRecord:
    served_utilities: list
    T: int
    transitions: list | None = None

    @property
    def M(self) -> int:
        return len(self.served_utilities)

    def score(self, theta: float) -> float:
        return sum(self.served_utilities) - theta * (self.T - self.M)


@dataclass
class MetricReport:
    mean_R: float
    ci95_R: float
    mean_T: float
    episodes: int
    theta: float


def run_episode(
    policy: Callable[[int], Action],
    env: EnvironmentPMF,
    mdp: MdpConfig,
    scheme: RewardScheme,
    rng: np.random.Generator | None = None,
    utilities: Iterable[int] | None = None,
    step_cap: int = 10**6,
    record: bool = False,
) -> EpisodeRecord:
    """Play one episode from ``b = 0`` until every block is occupied.

    Utilities come from ``utilities`` when given (replay), otherwise from ``rng``.
    """
    if utilities is None:
        if rng is None:
            raise ValueError("need either rng or a utility sequence")
        utilities = UtilityStream(env, rng)
    it: Iterator[int] = iter(utilities)
    U = mdp.U
    s = next(it)
    served, trace = [], [] if record else None
    T = 0
    while True:
        b, u = divmod(s - 1, U)
        a = policy(s)
        tr: Transition = step(s, a, next(it), scheme, mdp)
        T += 1
        if a == Action.SERVE:
            served.append(u + 1)
        if record:
            trace.append(tr)
        if tr.terminal:
            break
        if T >= step_cap:
            raise RuntimeError(f"episode did not terminate within {step_cap} steps")
        s = tr.s_next
    return EpisodeRecord(served, T, trace)


def simulate_episodes(
    serve: np.ndarray,
    env: EnvironmentPMF,
    episodes: int,
    rng: np.random.Generator,
    block: int = 64,
    step_cap: int = 10**6,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized play of a stationary deterministic policy.

    ``serve`` is an ``(N, U)`` boolean decision table. Utilities are drawn as
    ``(episodes, block)`` chunks, so the request sequence of episode ``i``
    depends on ``rng`` alone and not on the policy. Returns per-episode
    ``(served utility sum, T)``.
    """
    N, U = serve.shape
    cdf = np.cumsum(env.probs)
    cdf[-1] = 1.0
    b = np.zeros(episodes, dtype=np.int64)
    util_sum = np.zeros(episodes, dtype=np.int64)
    T = np.zeros(episodes, dtype=np.int64)
    active = np.arange(episodes)
    flat = serve.ravel()
    t = 0
    while active.size:
        if t >= step_cap:
            raise RuntimeError(f"episodes did not terminate within {step_cap} steps")
        chunk = np.searchsorted(cdf, rng.random((episodes, block)), side="right") + 1
        for j in range(block):
            u = chunk[active, j]
            bb = b[active]
            a = flat[bb * U + u - 1]
            T[active] += 1
            util_sum[active] += np.where(a, u, 0)
            b[active] = bb + a
            active = active[b[active] < N]
            if not active.size:
                break
        t += block
    return util_sum, T


def as_serve_table(policy, mdp: MdpConfig) -> np.ndarray:
    return decision_table(policy, mdp.N, mdp.U)


def estimate_R(
    policy,
    env: EnvironmentPMF,
    mdp: MdpConfig,
    scheme: RewardScheme,
    theta: float = 1.0,
    episodes: int = 10_000,
    rng: np.random.Generator | None = None,
    step_cap: int = 10**6,
) -> MetricReport:
    """Monte Carlo estimate of served utility minus ``theta`` times idle time."""
    if episodes < 1:
        raise ValueError("need at least one episode")
    if rng is None:
        rng = np.random.default_rng()
    serve = as_serve_table(policy, mdp)
    util_sum, T = simulate_episodes(serve, env, episodes, rng, step_cap=step_cap)
    return report_from_samples(util_sum, T, mdp.N, theta)


def report_from_samples(util_sum: np.ndarray, T: np.ndarray, N: int, theta: float) -> MetricReport:
    R = util_sum - theta * (T - N)
    n = R.size
    half = 1.96 * float(R.std(ddof=1)) / math.sqrt(n) if n > 1 else float("nan")
    return MetricReport(float(R.mean()), half, float(T.mean()), n, theta)


def performance_ratio(a: MetricReport, b: MetricReport) -> float:
    """``a.mean_R / b.mean_R``; NaN marks an undefined cell."""
    if b.mean_R == 0:
        return float("nan")
    return a.mean_R / b.mean_R


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepConfig:
    mdp: MdpConfig = MdpConfig()
    r_sh: float = 2.0
    r_sl: float = -1.0
    r_rh: float = -2.0
    r_rl: float = 1.0
    u_high: float | str = "mean"
    agent: AgentConfig = AgentConfig()
    stop: ConvergenceSpec = ConvergenceSpec()
    theta: float = 1.0
    episodes: int = 10_000
    seeds: int = 1

    def scheme_for(self, env: EnvironmentPMF) -> RewardScheme:
        u_high = env.u_bar if self.u_high == "mean" else float(self.u_high)
        return RewardScheme(self.r_sh, self.r_sl, self.r_rh, self.r_rl, u_high)


@dataclass
class SweepRow:
    env: int
    rho: float
    policy: str
    seed: int
    episodes: int
    mean_R: float
    ci95_R: float
    mean_T: float
    train_episodes_to_converge: int | None
    status: str = "ok"


CSV_COLUMNS = [
    "env", "rho", "policy", "seed", "episodes", "mean_R", "ci95_R", "mean_T",
    "train_episodes_to_converge", "status",
]


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def get(self, env: int, policy: str, seed: int = 0) -> SweepRow:
        for r in self.rows:
            if (r.env, r.policy, r.seed) == (env, policy, seed):
                return r
        raise KeyError((env, policy, seed))

    def report(self, env: int, policy: str, seed: int = 0) -> MetricReport:
        r = self.get(env, policy, seed)
        return MetricReport(r.mean_R, r.ci95_R, r.mean_T, r.episodes, float("nan"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            d = asdict(r)
            w.writerow(["" if d[c] is None else (repr(d[c]) if isinstance(d[c], float) else d[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"columns": CSV_COLUMNS, "rows": [asdict(r) for r in self.rows]}, indent=1) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        rows = []
        for d in csv.DictReader(io.StringIO(text)):
            rows.append(SweepRow(
                int(d["env"]), float(d["rho"]), d["policy"], int(d["seed"]), int(d["episodes"]),
                float(d["mean_R"]), float(d["ci95_R"]), float(d["mean_T"]),
                int(d["train_episodes_to_converge"]) if d["train_episodes_to_converge"] else None,
                d.get("status", "ok"),
            ))
        return cls(rows)

    def ratio_table(self, baseline: str = "thld:4") -> list[dict]:
        """Per (env, policy) ratio of mean_R to the baseline, averaged over seeds."""
        out = []
        envs = sorted({r.env for r in self.rows})
        policies = list(dict.fromkeys(r.policy for r in self.rows))
        for k in envs:
            for p in policies:
                ratios = []
                for r in self.rows:
                    if r.env != k or r.policy != p or r.status != "ok":
                        continue
                    try:
                        base = self.get(k, baseline, r.seed)
                    except KeyError:
                        continue
                    if base.status == "ok" and base.mean_R != 0:
                        ratios.append(r.mean_R / base.mean_R)
                out.append({"env": k, "policy": p, "ratio": float(np.mean(ratios)) if ratios else float("nan")})
        return out


def policy_key(policy: str) -> int:
    return zlib.crc32(policy.encode())


def parse_policy(policy: str):
    if policy in RL_METHODS:
        return policy
    if policy.startswith("thld:"):
        return ThresholdPolicy(int(policy.split(":", 1)[1]))
    raise ValueError(f"unknown policy {policy!r}")


def train_policy(method: str, env: EnvironmentPMF, cfg: SweepConfig, scheme: RewardScheme, rng) -> tuple[np.ndarray, int | None]:
    """Train ``method`` and return its frozen greedy serve table plus convergence episode."""
    agent = AgentConfig(method, cfg.agent.gamma, cfg.agent.alpha, cfg.agent.epsilon, cfg.agent.n, cfg.agent.first_visit)
    if method == "mc":
        V, trace = mc_train(env, agent, scheme, cfg.mdp, cfg.stop, rng)
        serve = mc_decision_grid(V, scheme, env.probs, agent.gamma)
    else:
        Q, trace = td_train(env, agent, scheme, cfg.mdp, cfg.stop, rng)
        serve = Q.greedy_grid()
    return serve, trace.converged_episode


def run_cell(k: int, policy: str, seed: int, cfg: SweepConfig, root_seed: int, env: EnvironmentPMF | None = None) -> SweepRow:
    env = catalog(k) if env is None else env
    try:
        scheme = cfg.scheme_for(env)
        parsed = parse_policy(policy)
        converged = None
        if isinstance(parsed, str):
            train_rng = child_rng(root_seed, k, policy_key(policy), seed)
            serve, converged = train_policy(parsed, env, cfg, scheme, train_rng)
        else:
            serve = as_serve_table(ThresholdPolicy(parsed.thld, cfg.mdp.U), cfg.mdp)
        eval_rng = child_rng(root_seed, k, EVAL_KEY, seed)
        rep = estimate_R(serve, env, cfg.mdp, scheme, cfg.theta, cfg.episodes, eval_rng)
        return SweepRow(k, env.rho, policy, seed, rep.episodes, rep.mean_R, rep.ci95_R, rep.mean_T, converged)
    except Exception as exc:  # a failed cell must not abort the grid
        log.warning("cell (%s, %s, %s) failed: %s", k, policy, seed, exc)
        nan = float("nan")
        return SweepRow(k, env.rho, policy, seed, 0, nan, nan, nan, None, f"failed: {exc}")


def default_policies(U: int = 10) -> list[str]:
    return list(RL_METHODS) + [f"thld:{t}" for t in range(1, U + 1)]


def sweep(
    envs: Iterable[int],
    policies: Iterable[str],
    cfg: SweepConfig,
    root_seed: int = 0,
    jobs: int = 1,
) -> SweepResult:
    """Evaluate every (environment, policy, seed) cell; rows are ordered by cell id."""
    envs, policies = list(envs), list(policies)
    if not envs or not policies:
        raise ValueError("empty sweep grid")
    for p in policies:
        policy_rank(p)  # unknown names fail before any compute
    cells = [(k, p, s) for k in envs for p in policies for s in range(cfg.seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {c: pool.submit(run_cell, *c, cfg, root_seed) for c in cells}
            rows = {c: f.result() for c, f in futures.items()}
    else:
        rows = {c: run_cell(*c, cfg, root_seed) for c in cells}
    return SweepResult([rows[c] for c in sorted(rows, key=lambda c: (c[0], policy_rank(c[1]), c[2]))])


def policy_rank(policy: str) -> tuple:
    """Canonical row order: learners first, then thresholds ascending."""
    if policy in RL_METHODS:
        return (0, RL_METHODS.index(policy), 0)
    if policy.startswith("thld:"):
        return (1, 0, int(policy.split(":", 1)[1]))
    raise ValueError(f"unknown policy {policy!r}")
