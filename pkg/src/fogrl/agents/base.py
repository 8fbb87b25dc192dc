from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

METHODS = ("ql", "esarsa", "sarsa", "mc")


@dataclass(frozen=True)
class AgentConfig:
    method: str = "ql"
    gamma: float = 0.7
    alpha: float = 0.01
    epsilon: float = 0.0
    n: int = 1
    first_visit: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class ConvergenceSpec:
    """Stop once no table entry moved more than ``tol`` over the last ``window`` episodes.

    ``window=None`` disables the test, so training runs to the episode or step budget.
    """

    window: int | None = 500
    tol: float = 0.01
    max_episodes: int = 20000
    max_steps: int | None = None
    episode_step_cap: int = 10**6

    def __post_init__(self):
        if self.max_episodes < 1:
            raise ValueError("episode budget must be positive")
        if (self.window is not None and self.window < 1) or self.tol <= 0:
            raise ValueError("window must be >= 1 and tol > 0")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("step budget must be positive")


@dataclass
class ConvergenceTrace:
    deltas: list = field(default_factory=list)
    converged_episode: int | None = None
    episodes: int = 0
    steps: int = 0

    @property
    def converged(self) -> bool:
        return self.converged_episode is not None

    def to_csv_rows(self):
        return [(i + 1, d) for i, d in enumerate(self.deltas)]


class WindowMonitor:
    """Tracks per-episode max change, the sliding-window test and the step budget.

    ``update`` returns True when training should stop: either the window test
    passed (recorded as convergence) or the step budget is spent.
    """

    def __init__(self, spec: ConvergenceSpec, initial: np.ndarray):
        self.spec = spec
        self.history = deque([initial.copy()], maxlen=(spec.window or 0) + 1)
        self.trace = ConvergenceTrace()

    def update(self, table: np.ndarray, steps: int) -> bool:
        prev = self.history[-1]
        self.trace.deltas.append(float(np.max(np.abs(table - prev))))
        self.history.append(table.copy())
        self.trace.episodes += 1
        self.trace.steps = steps
        if self.spec.window is not None and len(self.history) == self.history.maxlen:
            if float(np.max(np.abs(table - self.history[0]))) < self.spec.tol:
                self.trace.converged_episode = self.trace.episodes
                return True
        return self.spec.max_steps is not None and steps >= self.spec.max_steps


class UniformStream:
    """Buffered uniforms in [0, 1) exposing ``random()`` like a Generator."""

    def __init__(self, rng: np.random.Generator, batch: int = 4096):
        self.rng = rng
        self.batch = batch
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self.rng.random(self.batch).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x


def split_streams(rng: np.random.Generator):
    """Utility-draw and exploration generators derived from one training generator."""
    util_rng, explore_rng = rng.spawn(2)
    return util_rng, explore_rng
