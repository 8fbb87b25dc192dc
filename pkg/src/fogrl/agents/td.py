"""n-step Q-learning, Expected SARSA and SARSA on the tabular Q array."""
from __future__ import annotations

from collections import deque
from typing import Callable, Sequence

import numpy as np

from fogrl.agents.base import (
    AgentConfig,
    ConvergenceSpec,
    ConvergenceTrace,
    UniformStream,
    WindowMonitor,
    split_streams,
)
from fogrl.agents.policies import action_probs, reward_vectors
from fogrl.agents.tables import QTable
from fogrl.envs import EnvironmentPMF, UtilityStream
from fogrl.mdp import Action, MdpConfig, RewardScheme


def n_step_target(
    rewards: Sequence[float],
    bootstrap_state: int,
    next_action: Action | None,
    Q: QTable,
    cfg: AgentConfig,
    terminal: bool = False,
    policy_probs: np.ndarray | None = None,
) -> float:
    """Discounted rewards of the window plus ``gamma**len(window)`` times the method's bootstrap.

    The bootstrap is zero when ``terminal``; otherwise ``max_a Q`` (ql), the
    expectation under ``policy_probs`` (esarsa, defaulting to epsilon-greedy on
    ``Q``), or ``Q(s, next_action)`` (sarsa).
    """
    if len(rewards) == 0:
        raise ValueError("empty reward window")
    g = cfg.gamma
    G = 0.0
    for r in reversed(rewards):
        G = r + g * G
    if terminal:
        return G
    q = Q.q[bootstrap_state - 1]
    if cfg.method == "ql":
        boot = max(q[0], q[1])
    elif cfg.method == "esarsa":
        p = action_probs(bootstrap_state, Q, cfg.epsilon) if policy_probs is None else policy_probs
        boot = p[0] * q[0] + p[1] * q[1]
    elif cfg.method == "sarsa":
        if next_action is None:
            raise ValueError("sarsa needs the next action")
        boot = q[int(next_action)]
    else:
        raise ValueError(f"n_step_target does not handle method {cfg.method!r}")
    return G + g ** len(rewards) * boot


def q_update(Q: QTable, s: int, a: Action, G: float, alpha: float, mdp: MdpConfig | None = None) -> QTable:
    if mdp is not None and mdp.is_terminal(s):
        raise ValueError(f"refusing to update terminal state {s}")
    if (s - 1) // Q.U >= Q.N:
        raise ValueError(f"refusing to update terminal state {s}")
    old = Q.q[s - 1, int(a)]
    Q.q[s - 1, int(a)] = old + alpha * (G - old)
    return Q


def td_train(
    env: EnvironmentPMF,
    cfg: AgentConfig,
    scheme: RewardScheme,
    mdp: MdpConfig,
    stop: ConvergenceSpec,
    rng: np.random.Generator,
    log: list | None = None,
    on_episode: Callable[[int, np.ndarray], None] | None = None,
) -> tuple[QTable, ConvergenceTrace]:
    """Run episodes back to back, updating ``Q`` ``n`` steps behind the agent.

    The next action is always drawn before the pending update, for every
    method, so at ``epsilon = 0`` all three methods follow the same trajectory
    and compute the same targets. If ``log`` is given, each transition is
    appended to it as ``(s, a, r, s_next, terminal)`` with 1-based states.
    ``on_episode(e, q)`` receives a fresh ``(n_states, 2)`` copy after episode ``e``.
    """
    if cfg.method not in ("ql", "esarsa", "sarsa"):
        raise ValueError(f"td_train does not handle method {cfg.method!r}")
    N, U = mdp.N, mdp.U
    if env.U != U:
        raise ValueError(f"environment has {env.U} levels but config has U={U}")
    gamma, alpha, eps, n = cfg.gamma, cfg.alpha, cfg.epsilon, cfg.n
    method = cfg.method
    p_greedy, p_other = 1.0 - eps + eps / 2, eps / 2

    Q = [[0.0, 0.0] for _ in range(U * (N + 1))]
    rs, rr = (x.tolist() for x in reward_vectors(scheme, U))
    util_rng, explore_rng = split_streams(rng)
    utils, explore = UtilityStream(env, util_rng), UniformStream(explore_rng)
    monitor = WindowMonitor(stop, np.zeros((U * (N + 1), 2)))
    steps = 0

    def choose(idx):
        x = explore.random()
        if x < eps:
            return 1 if x < eps / 2 else 0
        q = Q[idx]
        return 1 if q[1] > q[0] else 0

    def bootstrap(idx, a_next):
        q = Q[idx]
        if method == "ql":
            return q[1] if q[1] > q[0] else q[0]
        if method == "sarsa":
            return q[a_next]
        if q[1] > q[0]:
            return p_greedy * q[1] + p_other * q[0]
        return p_greedy * q[0] + p_other * q[1]

    def flush_head(buf, boot):
        # the loop discounts boot by gamma once per buffered reward
        G = boot
        for _, _, r in reversed(buf):
            G = r + gamma * G
        s_idx, a_idx, _ = buf.popleft()
        row = Q[s_idx]
        row[a_idx] += alpha * (G - row[a_idx])

    for _ in range(stop.max_episodes):
        b = 0
        u = next(utils)
        idx = u - 1
        a = choose(idx)
        buf = deque()
        ep_steps = 0
        while True:
            r = rs[u - 1] if a else rr[u - 1]
            b_next = b + a
            u_next = next(utils)
            idx_next = U * b_next + u_next - 1
            terminal = b_next == N
            buf.append((idx, a, r))
            a_next = None if terminal else choose(idx_next)
            if log is not None:
                log.append((idx + 1, Action(a), r, idx_next + 1, terminal))
            if len(buf) == n:
                flush_head(buf, 0.0 if terminal else bootstrap(idx_next, a_next))
            ep_steps += 1
            if terminal:
                while buf:
                    flush_head(buf, 0.0)
                break
            if ep_steps > stop.episode_step_cap:
                raise RuntimeError("episode exceeded the step cap")
            b, u, idx, a = b_next, u_next, idx_next, a_next
        steps += ep_steps
        snapshot = np.array(Q)
        if on_episode is not None:
            on_episode(monitor.trace.episodes + 1, snapshot)
        if monitor.update(snapshot, steps):
            break

    return QTable(N, U, np.array(Q)), monitor.trace
