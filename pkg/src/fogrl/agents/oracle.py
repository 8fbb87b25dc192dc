"""Exact solution of the Bellman optimality equations by value iteration.

With the utility distribution known, the expectation over the next request is
a finite sum, so ``V*`` and ``Q*`` can be computed directly. Used as the
reference every learner is checked against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fogrl.agents.policies import lookahead_values
from fogrl.agents.tables import QTable, ValueTable
from fogrl.envs import EnvironmentPMF
from fogrl.mdp import MdpConfig, RewardScheme


@dataclass
class OracleSolution:
    values: ValueTable
    q: QTable
    deltas: list

    @property
    def sweeps(self) -> int:
        return len(self.deltas)

    def serve_grid(self) -> np.ndarray:
        return self.q.greedy_grid()


def value_iteration(
    env: EnvironmentPMF,
    scheme: RewardScheme,
    mdp: MdpConfig,
    tol: float = 1e-10,
    max_sweeps: int = 100_000,
    epsilon: float = 0.0,
) -> OracleSolution:
    """Sweep the Bellman optimality backup to a sup-norm fixed point.

    With ``epsilon > 0`` the backup values each state under the epsilon-greedy
    mixture instead of the max, giving the fixed point that on-policy learners
    (SARSA, Expected SARSA) reach with constant exploration.
    """
    N, U, gamma = mdp.N, mdp.U, mdp.gamma
    if env.U != U:
        raise ValueError(f"environment has {env.U} levels but config has U={U}")
    V = np.zeros((N + 1, U))
    deltas = []
    for _ in range(max_sweeps):
        serve, reject = lookahead_values(V, env.probs, scheme, gamma)
        V_new = V.copy()
        best = np.maximum(serve, reject)
        V_new[:N] = best if epsilon == 0 else (1 - epsilon) * best + epsilon * 0.5 * (serve + reject)
        delta = float(np.max(np.abs(V_new - V)))
        deltas.append(delta)
        V = V_new
        if delta < tol:
            break
    else:
        raise RuntimeError(f"value iteration did not reach {tol} in {max_sweeps} sweeps")
    serve, reject = lookahead_values(V, env.probs, scheme, gamma)
    q = np.zeros((N + 1, U, 2))
    q[:N, :, 0] = reject
    q[:N, :, 1] = serve
    # one final backup so that V is exactly the (soft) max of the returned Q
    best = np.maximum(serve, reject)
    V[:N] = best if epsilon == 0 else (1 - epsilon) * best + epsilon * 0.5 * (serve + reject)
    return OracleSolution(ValueTable(N, U, V.ravel().copy()), QTable(N, U, q.reshape(-1, 2)), deltas)


def dp_oracle(env: EnvironmentPMF, scheme: RewardScheme, mdp: MdpConfig) -> tuple[ValueTable, QTable]:
    sol = value_iteration(env, scheme, mdp)
    return sol.values, sol.q


def reachable_states(serve: np.ndarray, env: EnvironmentPMF) -> list[int]:
    """Non-terminal encoded states visited with positive probability from ``b = 0``.

    A block level is reachable only if the level below serves some utility
    the environment can produce.
    """
    N, U = serve.shape
    possible = env.probs > 0
    out = []
    for b in range(N):
        out.extend(U * b + u for u in range(1, U + 1) if possible[u - 1])
        if not np.any(serve[b] & possible):
            break
    return out


def gap_report(learned: QTable, oracle: QTable, env: EnvironmentPMF) -> dict:
    """Greedy agreement and sup-norm Q gap on states reachable under the optimal policy."""
    states = reachable_states(oracle.greedy_grid(), env)
    idx = np.asarray(states) - 1
    agree = (learned.q[idx, 1] > learned.q[idx, 0]) == (oracle.q[idx, 1] > oracle.q[idx, 0])
    gap = np.abs(learned.q[idx] - oracle.q[idx])
    return {
        "states": len(states),
        "agreement": float(agree.mean()),
        "disagreeing_states": [int(s) for s in np.asarray(states)[~agree]],
        "q_gap": float(gap.max()),
    }


def q_from_values(V: ValueTable, env: EnvironmentPMF, scheme: RewardScheme, gamma: float) -> QTable:
    """Lookahead action values implied by a state-value table."""
    serve, reject = lookahead_values(V.grid, env.probs, scheme, gamma)
    q = np.zeros((V.N + 1, V.U, 2))
    q[: V.N, :, 0] = reject
    q[: V.N, :, 1] = serve
    return QTable(V.N, V.U, q.reshape(-1, 2))
