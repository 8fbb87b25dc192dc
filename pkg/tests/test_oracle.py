import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fogrl.agents import dp_oracle, reachable_states, value_iteration
from fogrl.agents.policies import reward_vectors
from fogrl.envs import EnvironmentPMF, catalog, point_mass
from fogrl.mdp import MdpConfig, RewardScheme

DEFAULT_REWARDS = dict(r_sh=2.0, r_sl=-1.0, r_rh=-2.0, r_rl=1.0)


def enumerate_optimum(env, scheme, mdp):
    """Best value over every deterministic policy, each evaluated by a linear solve."""
    N, U, g = mdp.N, mdp.U, mdp.gamma
    rs, rr = reward_vectors(scheme, U)
    n = N * U
    best = np.full(n, -np.inf)
    for bits in itertools.product((0, 1), repeat=n):
        serve = np.array(bits, dtype=bool).reshape(N, U)
        P = np.zeros((n, n))
        r = np.zeros(n)
        for b in range(N):
            for u in range(U):
                i = b * U + u
                r[i] = rs[u] if serve[b, u] else rr[u]
                nb = b + serve[b, u]
                if nb < N:
                    P[i, nb * U:(nb + 1) * U] = env.probs
        v = np.linalg.solve(np.eye(n) - g * P, r)
        best = np.maximum(best, v)
    return best


@pytest.mark.parametrize("seed", range(4))
def test_value_iteration_matches_policy_enumeration(seed):
    rng = np.random.default_rng(seed)
    mdp = MdpConfig(N=2, U=3, gamma=0.8)
    env = EnvironmentPMF(rng.dirichlet(np.ones(3)))
    scheme = RewardScheme(u_high=float(rng.uniform(1, 3)), **DEFAULT_REWARDS)
    V, Q = dp_oracle(env, scheme, mdp)
    np.testing.assert_allclose(V.values[: mdp.N * mdp.U], enumerate_optimum(env, scheme, mdp), atol=1e-8)


def test_single_block_point_mass():
    mdp = MdpConfig(N=1, U=10, gamma=0.7)
    V, Q = dp_oracle(point_mass(1), RewardScheme(u_high=1, **DEFAULT_REWARDS), mdp)
    assert V[1] == pytest.approx(2.0)
    assert Q[1, 1] == pytest.approx(2.0)
    assert Q[1, 0] == pytest.approx(-0.6)


def test_terminal_rows_zero():
    mdp = MdpConfig()
    V, Q = dp_oracle(catalog(7), RewardScheme(u_high=4.97, **DEFAULT_REWARDS), mdp)
    assert np.all(V.grid[mdp.N] == 0)
    assert np.all(Q.grid[mdp.N] == 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(2, 6), st.floats(0.0, 0.95), st.floats(1.0, 6.0), st.integers(0, 2**31))
def test_bellman_properties(N, U, gamma, u_high, seed):
    env = EnvironmentPMF(np.random.default_rng(seed).dirichlet(np.ones(U)))
    mdp = MdpConfig(N, U, gamma)
    sol = value_iteration(env, RewardScheme(u_high=u_high, **DEFAULT_REWARDS), mdp)
    np.testing.assert_array_equal(sol.values.grid[:N], sol.q.grid[:N].max(axis=-1))
    d = np.array(sol.deltas)
    # gamma-contraction of successive sweep deltas (first sweep from zero excluded)
    if d.size > 2:
        assert np.all(d[2:] <= gamma * d[1:-1] + 1e-12)


def test_full_scale_sweeps_and_contraction():
    env = catalog(7)
    sol = value_iteration(env, RewardScheme(u_high=env.u_bar, **DEFAULT_REWARDS), MdpConfig())
    assert sol.deltas[-1] < 1e-10
    assert sol.sweeps < 200


def test_epsilon_soft_fixed_point_is_below_optimum():
    env = catalog(7)
    sch = RewardScheme(u_high=env.u_bar, **DEFAULT_REWARDS)
    opt = value_iteration(env, sch, MdpConfig())
    soft = value_iteration(env, sch, MdpConfig(), epsilon=0.1)
    assert np.all(soft.values.values <= opt.values.values + 1e-9)
    assert np.max(opt.values.values - soft.values.values) > 0.05


def test_reachable_states_stop_at_dead_level():
    serve = np.zeros((3, 4), dtype=bool)
    serve[0, 2] = True
    env = EnvironmentPMF(np.array([0.5, 0.0, 0.5, 0.0]))
    # level 0 serves u=3; level 1 serves nothing, so level 2 is unreachable
    assert reachable_states(serve, env) == [1, 3, 5, 7]
