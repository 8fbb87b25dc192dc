"""Decision rules: fixed thresholds, one-step lookahead on V, and greedy / epsilon-greedy on Q."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fogrl.agents.tables import QTable, ValueTable
from fogrl.envs import EnvironmentPMF
from fogrl.mdp import Action, RewardScheme, decode_state


@dataclass(frozen=True)
class ThresholdPolicy:
    thld: int
    U: int = 10

    def __post_init__(self):
        if not 1 <= self.thld <= self.U:
            raise ValueError(f"threshold {self.thld} outside [1, {self.U}]")

    def __call__(self, s: int) -> Action:
        return threshold_action(decode_state(s, self.U)[1], self)

    @property
    def name(self) -> str:
        return f"thld:{self.thld}"


def threshold_action(u: int, p: ThresholdPolicy) -> Action:
    return Action.SERVE if u >= p.thld else Action.REJECT


def reward_vectors(scheme: RewardScheme, U: int) -> tuple[np.ndarray, np.ndarray]:
    """Serve and reject rewards for each level ``1..U``."""
    u = np.arange(1, U + 1)
    high = u >= scheme.u_high
    return np.where(high, scheme.r_sh, scheme.r_sl), np.where(high, scheme.r_rh, scheme.r_rl)


def lookahead_values(values_grid: np.ndarray, probs: np.ndarray, scheme: RewardScheme, gamma: float):
    """One-step lookahead ``(serve, reject)`` values for non-terminal states, each ``(N, U)``.

    ``values_grid`` is indexed ``[b, u-1]``; the next utility is averaged out with ``probs``.
    """
    rs, rr = reward_vectors(scheme, values_grid.shape[1])
    ev = values_grid @ probs
    serve = rs[None, :] + gamma * ev[1:, None]
    reject = rr[None, :] + gamma * ev[:-1, None]
    return serve, reject


def mc_decision_grid(V: ValueTable, scheme: RewardScheme, probs: np.ndarray, gamma: float) -> np.ndarray:
    serve, reject = lookahead_values(V.grid, probs, scheme, gamma)
    return serve > reject


def mc_action(s: int, V: ValueTable, scheme: RewardScheme, env: EnvironmentPMF, gamma: float) -> Action:
    """Serve iff the lookahead value of serving strictly beats rejecting."""
    b, u = decode_state(s, V.U, V.N)
    if b >= V.N:
        raise ValueError(f"state {s} is terminal")
    grid = mc_decision_grid(V, scheme, env.probs, gamma)
    return Action.SERVE if grid[b, u - 1] else Action.REJECT


def greedy_q_action(s: int, Q: QTable) -> Action:
    return Action.SERVE if Q.q[s - 1, 1] > Q.q[s - 1, 0] else Action.REJECT


def epsilon_greedy(s: int, Q: QTable, epsilon: float, rng) -> Action:
    """One uniform draw ``x``: explore when ``x < epsilon``, serving on its lower half."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    x = rng.random()
    if x < epsilon:
        return Action.SERVE if x < epsilon / 2 else Action.REJECT
    return greedy_q_action(s, Q)


def action_probs(s: int, Q: QTable, epsilon: float) -> np.ndarray:
    """Epsilon-greedy distribution over ``(reject, serve)`` at state ``s``."""
    p = np.full(2, epsilon / 2)
    p[int(greedy_q_action(s, Q))] += 1.0 - epsilon
    return p


def decision_table(policy, N: int, U: int) -> np.ndarray:
    """Tabulate a deterministic policy into a boolean serve array of shape ``(N, U)``.

    ``policy`` may be a :class:`ThresholdPolicy`, a :class:`QTable` (greedy), an
    ``(N, U)`` boolean array, or any callable mapping an encoded state to an action.
    """
    if isinstance(policy, ThresholdPolicy):
        return np.tile(np.arange(1, U + 1) >= policy.thld, (N, 1))
    if isinstance(policy, QTable):
        return policy.greedy_grid()
    if isinstance(policy, np.ndarray):
        if policy.shape != (N, U):
            raise ValueError(f"decision array has shape {policy.shape}, expected {(N, U)}")
        return policy.astype(bool)
    grid = np.zeros((N, U), dtype=bool)
    for b in range(N):
        for u in range(1, U + 1):
            grid[b, u - 1] = policy(U * b + u) == Action.SERVE
    return grid
