
import pytest
from hypothesis import given, strategies as st

from fogrl.mdp import (
    Action,
    MdpConfig,
    RewardScheme,
    UtilityParams,
    compute_utility,
    decode_state,
    discounted_return,
    discretize_utility,
    encode_state,
    reward,
    step,
)

R, S = Action.REJECT, Action.SERVE
DEFAULT_REWARDS = dict(r_sh=2.0, r_sl=-1.0, r_rh=-2.0, r_rl=1.0)

# 5-block episode with U=10, u_h=6: (u_t, b_t, s_t, a_t, reward case, s_{t+1})
SCRIPTED_EPISODE = [
    (5, 0, 5, R, "rl", 9),
    (9, 0, 9, S, "sh", 13),
    (3, 1, 13, R, "rl", 13),
    (3, 1, 13, S, "sl", 28),
    (8, 2, 28, S, "sh", 36),
    (6, 3, 36, R, "rh", 31),
    (1, 3, 31, R, "rl", 40),
    (10, 3, 40, S, "sh", 47),
    (7, 4, 47, R, "rh", 49),
    (9, 4, 49, S, "sh", 54),
]


@pytest.fixture
def scheme6():
    return RewardScheme(u_high=6, **DEFAULT_REWARDS)


@pytest.mark.parametrize("b,u,s", [(0, 5, 5), (4, 9, 49), (0, 1, 1)])
def test_encode_examples(b, u, s):
    assert encode_state(b, u, 10) == s


@pytest.mark.parametrize("s,b,u", [(28, 2, 8), (54, 5, 4), (1, 0, 1)])
def test_decode_examples(s, b, u):
    assert decode_state(s, 10) == (b, u)


def test_encode_decode_errors():
    with pytest.raises(ValueError):
        encode_state(0, 0, 10)
    with pytest.raises(ValueError):
        encode_state(0, 11, 10)
    with pytest.raises(ValueError):
        encode_state(6, 1, 10, N=5)
    with pytest.raises(ValueError):
        decode_state(0, 10)
    with pytest.raises(ValueError):
        decode_state(61, 10, N=5)


@given(st.integers(1, 40), st.integers(2, 20), st.data())
def test_encode_decode_roundtrip(N, U, data):
    b = data.draw(st.integers(0, N))
    u = data.draw(st.integers(1, U))
    s = encode_state(b, u, U, N)
    assert 1 <= s <= U * (N + 1)
    assert decode_state(s, U, N) == (b, u)


def test_state_space_size():
    mdp = MdpConfig(N=15, U=10)
    assert mdp.n_states == 160
    assert sum(mdp.is_terminal(s) for s in range(1, 161)) == 10


@pytest.mark.parametrize("kw", [dict(N=0), dict(U=1), dict(gamma=1.5), dict(gamma=-0.1)])
def test_mdp_config_rejects_invalid(kw):
    with pytest.raises(ValueError):
        MdpConfig(**kw)


def test_reward_examples(scheme6):
    assert reward(9, S, scheme6) == 2.0
    assert reward(5, R, scheme6) == 1.0
    assert reward(6, R, scheme6) == -2.0  # u == u_h counts as high


@given(st.integers(1, 10), st.sampled_from(list(Action)), st.floats(0.5, 10.5))
def test_reward_exactly_one_case(u, a, u_high):
    sch = RewardScheme(r_sh=11.0, r_sl=12.0, r_rh=13.0, r_rl=14.0, u_high=u_high)
    r = reward(u, a, sch)
    expected = {(S, True): 11.0, (S, False): 12.0, (R, True): 13.0, (R, False): 14.0}[(a, u >= u_high)]
    assert r == expected


def test_step_examples(scheme6):
    mdp = MdpConfig(N=5, U=10)
    tr = step(5, R, 9, scheme6, mdp)
    assert (tr.s_next, tr.r, tr.terminal) == (9, 1.0, False)
    tr = step(49, S, 4, scheme6, mdp)
    assert (tr.s_next, tr.r, tr.terminal) == (54, 2.0, True)
    tr = step(13, R, 3, scheme6, mdp)
    assert (tr.s_next, tr.r, tr.terminal) == (13, 1.0, False)


def test_step_from_terminal_raises(scheme6):
    with pytest.raises(RuntimeError):
        step(54, S, 1, scheme6, MdpConfig(N=5, U=10))


def test_scripted_episode_replay(scheme6):
    mdp = MdpConfig(N=5, U=10)
    case = {"sh": 2.0, "sl": -1.0, "rh": -2.0, "rl": 1.0}
    utilities = [row[0] for row in SCRIPTED_EPISODE] + [4]
    s = encode_state(0, utilities[0], 10)
    for t, (u, b, s_t, a, rc, s_next) in enumerate(SCRIPTED_EPISODE):
        assert s == s_t
        assert decode_state(s, 10) == (b, u)
        tr = step(s, a, utilities[t + 1], scheme6, mdp)
        assert tr.r == case[rc]
        assert tr.s_next == s_next
        assert tr.terminal == (t == len(SCRIPTED_EPISODE) - 1)
        s = tr.s_next


@given(st.integers(1, 6), st.lists(st.tuples(st.sampled_from(list(Action)), st.integers(1, 10)), max_size=60))
def test_step_block_accounting(N, moves):
    mdp = MdpConfig(N=N, U=10)
    sch = RewardScheme()
    s, serves = 3, 0
    for t, (a, u_next) in enumerate(moves):
        b_before = decode_state(s, 10)[0]
        tr = step(s, a, u_next, sch, mdp)
        b_after = decode_state(tr.s_next, 10)[0]
        assert b_after == b_before + (a == S)
        serves += a == S
        assert b_after == serves
        if tr.terminal:
            assert serves == N and t + 1 >= N
            break
        s = tr.s_next


@pytest.mark.parametrize(
    "params",
    [
        UtilityParams(kappa=1, zeta=0, beta=1, latency=0.25),
        UtilityParams(kappa=1, zeta=1, beta=0, capacity=8, throughput=2, latency=123.0),
        UtilityParams(kappa=2, zeta=1, beta=1, capacity=8, throughput=2, latency=2),
    ],
)
def test_compute_utility_examples(params):
    assert compute_utility(params) == pytest.approx(4.0)


def test_compute_utility_errors():
    with pytest.raises(ValueError):
        compute_utility(UtilityParams(latency=0))
    with pytest.raises(ValueError):
        compute_utility(UtilityParams(zeta=1, throughput=0))


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.1, 3), st.floats(0.1, 3))
def test_compute_utility_monotone(l1, l2, beta, zeta):
    if l1 == l2:
        return
    lo, hi = sorted((l1, l2))
    base = dict(kappa=1.5, zeta=zeta, beta=beta, throughput=2.0)
    assert compute_utility(UtilityParams(latency=lo, capacity=5, **base)) > compute_utility(
        UtilityParams(latency=hi, capacity=5, **base))
    assert compute_utility(UtilityParams(latency=1, capacity=hi, **base)) > compute_utility(
        UtilityParams(latency=1, capacity=lo, **base))


def _brute_bin(x, U, low, high):
    # scan bin edges one by one
    x = min(max(x, low), high)
    width = (high - low) / U
    for level in range(1, U + 1):
        if x < low + level * width:
            return level
    return U


def test_discretize_examples():
    assert discretize_utility(0.0, 10, (0.0, 1.0)) == 1
    assert discretize_utility(1.0, 10, (0.0, 1.0)) == 10
    low, high = 2.0, 6.0
    assert _brute_bin(low + 0.35 * (high - low), 10, low, high) == 4
    assert discretize_utility(low + 0.35 * (high - low), 10, (low, high)) == 4


@pytest.mark.parametrize("U", [2, 7, 10])
def test_discretize_matches_brute_force_grid(U):
    low, high = -3.0, 5.0
    for i in range(-50, 451):
        x = low + (high - low) * i / 397.0
        assert discretize_utility(x, U, (low, high)) == _brute_bin(x, U, low, high)


def test_discretize_invalid_bounds():
    with pytest.raises(ValueError):
        discretize_utility(0.5, 10, (1.0, 1.0))


def test_discounted_return_examples():
    assert discounted_return([3.5], 0.0) == 3.5
    assert discounted_return([1, 1, 1], 1.0) == 3
    assert discounted_return([1, 2, 4], 0.5) == 3.0


@given(st.floats(-10, 10), st.integers(0, 50))
def test_discounted_return_constant(c, L):
    assert discounted_return([c] * L, 1.0) == pytest.approx(c * L, abs=1e-9)


@given(st.lists(st.floats(-5, 5), max_size=30), st.floats(0, 1))
def test_discounted_return_matches_power_sum(rs, g):
    assert discounted_return(rs, g) == pytest.approx(sum(g**j * r for j, r in enumerate(rs)), abs=1e-9)
