"""IoT environments: utility-level distributions and samplers.

The catalog holds 19 environments indexed by ``k``, with ``rho = P(u > 5)``
equal to ``0.05 * k``. Six of them are published; every one of the 19 is
generated from the published ``E_7`` column by rescaling the low block
(``u <= 5``) and the high block (``u > 5``) to masses ``1 - rho`` and
``rho`` while keeping the within-block proportions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLIT_LEVEL = 5
N_CATALOG = 19

# Published utility distributions P(u=1..10), keyed by catalog index.
PUBLISHED = {
    1: (0.015, 0.073, 0.365, 0.292, 0.205, 0.014, 0.013, 0.011, 0.009, 0.003),
    4: (0.012, 0.062, 0.308, 0.246, 0.172, 0.057, 0.051, 0.046, 0.034, 0.012),
    7: (0.010, 0.050, 0.250, 0.200, 0.140, 0.100, 0.090, 0.080, 0.060, 0.020),
    10: (0.008, 0.038, 0.192, 0.154, 0.108, 0.142, 0.129, 0.114, 0.086, 0.029),
    15: (0.004, 0.019, 0.096, 0.077, 0.054, 0.214, 0.193, 0.171, 0.129, 0.043),
    19: (0.001, 0.004, 0.019, 0.015, 0.011, 0.271, 0.244, 0.217, 0.163, 0.055),
}
PUBLISHED_MEANS = {1: 3.82, 4: 4.4, 7: 4.97, 10: 5.55, 15: 6.5, 19: 7.27}
BASE_INDEX = 7


@dataclass(frozen=True)
class EnvironmentPMF:
    """Distribution of request utility levels ``1..U``."""

    probs: np.ndarray
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a vector of at least two levels")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probs must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probs must sum to 1 (got {p.sum():.12g})")
        p = p / p.sum()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __eq__(self, other):
        return isinstance(other, EnvironmentPMF) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    @property
    def U(self) -> int:
        return self.probs.size

    @property
    def levels(self) -> np.ndarray:
        return np.arange(1, self.U + 1)

    @property
    def rho(self) -> float:
        return float(self.probs[SPLIT_LEVEL:].sum())

    @property
    def u_bar(self) -> float:
        return float(self.levels @ self.probs)

    def to_record(self) -> dict:
        return {"name": self.name, "probs": [float(x) for x in self.probs]}

    @classmethod
    def from_record(cls, record: dict) -> "EnvironmentPMF":
        probs = np.asarray(record["probs"], dtype=float)
        # published tables are rounded; renormalize anything within rounding error
        if abs(probs.sum() - 1.0) > 1e-3:
            raise ValueError(f"probs sum to {probs.sum():.6g}, not 1")
        return cls(probs / probs.sum(), name=record.get("name", "custom"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_record(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EnvironmentPMF":
        return cls.from_record(json.loads(Path(path).read_text()))


def point_mass(u: int, U: int = 10) -> EnvironmentPMF:
    p = np.zeros(U)
    p[u - 1] = 1.0
    return EnvironmentPMF(p, name=f"point{u}")


def uniform(U: int = 10) -> EnvironmentPMF:
    return EnvironmentPMF(np.full(U, 1.0 / U), name="uniform")


def published(k: int) -> EnvironmentPMF:
    """A published catalog column, renormalized to sum to exactly one."""
    p = np.asarray(PUBLISHED[k], dtype=float)
    return EnvironmentPMF(p / p.sum(), name=f"E{k}")


def build_environment(rho: float, base: EnvironmentPMF, split: int = SPLIT_LEVEL) -> EnvironmentPMF:
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    p = np.array(base.probs, dtype=float)
    low, high = p[:split].sum(), p[split:].sum()
    if (low == 0 and rho < 1) or (high == 0 and rho > 0):
        raise ValueError("base environment has no mass in a block that must receive mass")
    out = np.zeros_like(p)
    if rho < 1:
        out[:split] = p[:split] * ((1.0 - rho) / low)
    if rho > 0:
        out[split:] = p[split:] * (rho / high)
    return EnvironmentPMF(out / out.sum(), name=f"rho{rho:g}")


def catalog(k: int) -> EnvironmentPMF:
    if not 1 <= k <= N_CATALOG:
        raise ValueError(f"catalog index must be in 1..{N_CATALOG}, got {k}")
    env = build_environment(round(0.05 * k, 10), published(BASE_INDEX))
    return EnvironmentPMF(env.probs, name=f"E{k}")


def env_stats(env: EnvironmentPMF) -> tuple[float, float]:
    return env.rho, env.u_bar


def sample_utility(env: EnvironmentPMF, rng: np.random.Generator) -> int:
    return int(rng.choice(env.U, p=env.probs)) + 1


class UtilityStream:
    """Buffered iid utility draws; the sequence depends only on the generator state."""

    def __init__(self, env: EnvironmentPMF, rng: np.random.Generator, batch: int = 4096):
        self.env = env
        self.rng = rng
        self.batch = batch
        self._cdf = np.cumsum(env.probs)
        self._cdf[-1] = 1.0
        self._buf: list[int] = []
        self._pos = 0

    def _refill(self):
        x = self.rng.random(self.batch)
        self._buf = (np.searchsorted(self._cdf, x, side="right") + 1).tolist()
        self._pos = 0

    def __iter__(self):
        return self

    def __next__(self) -> int:
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        return u


def child_rng(root_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a cell identified by integer ``key``."""
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=tuple(key)))
