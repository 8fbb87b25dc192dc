"""Monte Carlo control on state values with model-based one-step lookahead."""
from __future__ import annotations

from typing import Callable

import numpy as np

from fogrl.agents.base import (
    AgentConfig,
    ConvergenceSpec,
    ConvergenceTrace,
    UniformStream,
    WindowMonitor,
    split_streams,
)
from fogrl.agents.policies import mc_decision_grid, reward_vectors
from fogrl.agents.tables import ValueTable
from fogrl.envs import EnvironmentPMF, UtilityStream
from fogrl.mdp import MdpConfig, RewardScheme


def mc_train(
    env: EnvironmentPMF,
    cfg: AgentConfig,
    scheme: RewardScheme,
    mdp: MdpConfig,
    stop: ConvergenceSpec,
    rng: np.random.Generator,
    model: str = "true",
    on_episode: Callable[[int, np.ndarray], None] | None = None,
) -> tuple[ValueTable, ConvergenceTrace]:
    """Learn ``V`` by averaging episode returns.

    Every episode starts with all blocks free and acts through the lookahead rule
    on the current ``V`` (with an ``epsilon`` chance of a uniformly random action).
    ``model="true"`` averages the next utility with ``env.probs``; ``"empirical"``
    uses the running frequencies of utilities seen so far. ``on_episode(e, v)``
    receives a copy of the flat value array after episode ``e``.
    """
    if stop.max_episodes < 1:
        raise ValueError("episode budget must be positive")
    if model not in ("true", "empirical"):
        raise ValueError(f"unknown model {model!r}")
    N, U, gamma, eps = mdp.N, mdp.U, cfg.gamma, cfg.epsilon
    if env.U != U:
        raise ValueError(f"environment has {env.U} levels but config has U={U}")

    V = ValueTable(N, U)
    rs, rr = (x.tolist() for x in reward_vectors(scheme, U))
    util_rng, explore_rng = split_streams(rng)
    utils, explore = UtilityStream(env, util_rng), UniformStream(explore_rng)
    seen = np.zeros(U)
    monitor = WindowMonitor(stop, V.values)
    steps = 0

    for _ in range(stop.max_episodes):
        if model == "true":
            probs = env.probs
        else:
            probs = seen / seen.sum() if seen.sum() > 0 else np.full(U, 1.0 / U)
        serve_flags = mc_decision_grid(V, scheme, probs, gamma).ravel().tolist()

        visited, rewards = [], []
        b = 0
        u = next(utils)
        while b < N:
            idx = U * b + u - 1
            x = explore.random()
            serve = (x < eps / 2) if x < eps else serve_flags[idx]
            visited.append(idx)
            seen[u - 1] += 1
            if serve:
                rewards.append(rs[u - 1])
                b += 1
            else:
                rewards.append(rr[u - 1])
            u = next(utils)
            if len(visited) > stop.episode_step_cap:
                raise RuntimeError("episode exceeded the step cap")
        steps += len(visited)

        returns = [0.0] * len(rewards)
        G = 0.0
        for i in range(len(rewards) - 1, -1, -1):
            G = rewards[i] + gamma * G
            returns[i] = G
        if cfg.first_visit:
            first = {}
            for i, idx in enumerate(visited):
                first.setdefault(idx, i)
            idxs = np.fromiter(first.keys(), dtype=np.int64)
            rets = np.array([returns[i] for i in first.values()])
        else:
            idxs = np.asarray(visited, dtype=np.int64)
            rets = np.asarray(returns)
        np.add.at(V.sums, idxs, rets)
        np.add.at(V.counts, idxs, 1)
        hit = V.counts > 0
        V.values[hit] = V.sums[hit] / V.counts[hit]

        if on_episode is not None:
            on_episode(monitor.trace.episodes + 1, V.values.copy())
        if monitor.update(V.values, steps):
            break
    return V, monitor.trace
