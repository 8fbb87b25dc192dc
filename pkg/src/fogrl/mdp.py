"""State space, rewards and dynamics of the fog-node admission MDP.

A fog node owns ``N`` resource blocks. Requests arrive one at a time with a
discrete utility level ``u`` in ``1..U``; the node either serves the request
(consuming one block) or rejects it (referring it to the cloud). The state is
the pair ``(b, u)`` of occupied blocks and pending utility, encoded as the
integer ``U*b + u``. An episode ends once every block is occupied.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class Action(enum.IntEnum):
    REJECT = 0
    SERVE = 1


ACTIONS = (Action.REJECT, Action.SERVE)


@dataclass(frozen=True)
class MdpConfig:
    N: int = 15
    U: int = 10
    gamma: float = 0.7

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if int(self.U) != self.U or self.U < 2:
            raise ValueError(f"U must be an integer >= 2, got {self.U}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.U * (self.N + 1)

    def is_terminal(self, s: int) -> bool:
        return decode_state(s, self.U, self.N)[0] == self.N

    def nonterminal_states(self) -> range:
        return range(1, self.U * self.N + 1)


@dataclass(frozen=True)
class RewardScheme:
    """Immediate rewards for the four (action, utility class) cases.

    ``u_high`` may be fractional (e.g. an environment mean); a request is
    high-utility when ``u >= u_high``.
    """

    r_sh: float = 2.0
    r_sl: float = -1.0
    r_rh: float = -2.0
    r_rl: float = 1.0
    u_high: float = 6.0

    def serve_reward(self, u: int) -> float:
        return self.r_sh if u >= self.u_high else self.r_sl

    def reject_reward(self, u: int) -> float:
        return self.r_rh if u >= self.u_high else self.r_rl


@dataclass(frozen=True)
class UtilityParams:
    kappa: float = 1.0
    zeta: float = 0.0
    beta: float = 1.0
    latency: float = 1.0
    throughput: float = 1.0
    capacity: float = 1.0


@dataclass(frozen=True)
class Transition:
    s: int
    a: Action
    r: float
    s_next: int
    terminal: bool


def encode_state(b: int, u: int, U: int, N: int | None = None) -> int:
    if b < 0 or (N is not None and b > N):
        raise ValueError(f"occupied blocks b={b} out of range")
    if not 1 <= u <= U:
        raise ValueError(f"utility level u={u} out of range 1..{U}")
    return U * b + u


def decode_state(s: int, U: int, N: int | None = None) -> tuple[int, int]:
    upper = U * (N + 1) if N is not None else None
    if s < 1 or (upper is not None and s > upper):
        raise ValueError(f"encoded state s={s} out of range")
    b, r = divmod(s - 1, U)
    return b, r + 1


def reward(u: int, a: Action, scheme: RewardScheme) -> float:
    if a == Action.SERVE:
        return scheme.serve_reward(u)
    return scheme.reject_reward(u)


def step(s: int, a: Action, u_next: int, scheme: RewardScheme, mdp: MdpConfig) -> Transition:
    """Apply ``a`` in state ``s`` and move to the next request ``u_next``."""
    b, u = decode_state(s, mdp.U, mdp.N)
    if b >= mdp.N:
        raise RuntimeError(f"cannot step from terminal state {s}")
    b_next = b + 1 if a == Action.SERVE else b
    s_next = encode_state(b_next, u_next, mdp.U, mdp.N)
    return Transition(s, Action(a), reward(u, a, scheme), s_next, b_next == mdp.N)


def compute_utility(p: UtilityParams) -> float:
    """Continuous utility ``kappa * (C/omega)**zeta / l**beta``."""
    if p.latency <= 0:
        raise ValueError("latency requirement must be positive")
    if p.zeta == 0:
        mu_term = 1.0
    else:
        if p.throughput <= 0:
            raise ValueError("throughput requirement must be positive when zeta > 0")
        mu_term = (p.capacity / p.throughput) ** p.zeta
    return p.kappa * mu_term / p.latency ** p.beta


def discretize_utility(x: float, U: int, bounds: tuple[float, float]) -> int:
    """Equal-width binning of ``x`` over ``bounds`` into levels ``1..U``."""
    low, high = bounds
    if not high > low:
        raise ValueError(f"invalid bounds {bounds}")
    if U < 2:
        raise ValueError("U must be >= 2")
    frac = (min(max(x, low), high) - low) / (high - low)
    return min(int(math.floor(frac * U)) + 1, U)


def discounted_return(rewards: Sequence[float] | Iterable[float], gamma: float) -> float:
    total = 0.0
    for r in reversed(list(rewards)):
        total = r + gamma * total
    return total
