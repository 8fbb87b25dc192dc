"""Tabular value containers and their on-disk format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fogrl.mdp import Action, MdpConfig

MAGIC = "FOGRL-TABLE 1"


@dataclass
class ValueTable:
    """State values indexed by encoded state ``s`` (stored at ``s - 1``)."""

    N: int
    U: int
    values: np.ndarray = None
    sums: np.ndarray = None
    counts: np.ndarray = None

    def __post_init__(self):
        n = self.U * (self.N + 1)
        if self.values is None:
            self.values = np.zeros(n)
        if self.sums is None:
            self.sums = np.zeros(n)
        if self.counts is None:
            self.counts = np.zeros(n, dtype=np.int64)
        if self.values.shape != (n,):
            raise ValueError(f"value vector has shape {self.values.shape}, expected ({n},)")

    def __getitem__(self, s: int) -> float:
        return float(self.values[s - 1])

    @property
    def grid(self) -> np.ndarray:
        """Values as an ``(N+1, U)`` array indexed by ``[b, u-1]``."""
        return self.values.reshape(self.N + 1, self.U)


@dataclass
class QTable:
    """Action values, ``q[s - 1, a]`` with columns ordered as :class:`Action`."""

    N: int
    U: int
    q: np.ndarray = None

    def __post_init__(self):
        n = self.U * (self.N + 1)
        if self.q is None:
            self.q = np.zeros((n, 2))
        if self.q.shape != (n, 2):
            raise ValueError(f"Q array has shape {self.q.shape}, expected ({n}, 2)")

    @classmethod
    def zeros(cls, mdp: MdpConfig) -> "QTable":
        return cls(mdp.N, mdp.U)

    def __getitem__(self, key) -> float:
        s, a = key
        return float(self.q[s - 1, int(a)])

    def __setitem__(self, key, value: float):
        s, a = key
        self.q[s - 1, int(a)] = value

    @property
    def grid(self) -> np.ndarray:
        return self.q.reshape(self.N + 1, self.U, 2)

    def greedy_grid(self) -> np.ndarray:
        """Boolean serve decisions for non-terminal states, shape ``(N, U)``."""
        g = self.grid[: self.N]
        return g[..., Action.SERVE] > g[..., Action.REJECT]


def _shape_error(kind, N, U, mdp):
    return ValueError(f"{kind} table has shape (N={N}, U={U}) but config has (N={mdp.N}, U={mdp.U})")


def save_table(path: str | Path, table: ValueTable | QTable, method: str, config: dict | None = None) -> None:
    doc = {"method": method, "config": config or {}, "N": table.N, "U": table.U}
    if isinstance(table, QTable):
        doc["kind"] = "q"
        doc["q"] = [[float(x) for x in row] for row in table.q]
    else:
        doc["kind"] = "v"
        doc["values"] = [float(x) for x in table.values]
        doc["counts"] = [int(x) for x in table.counts]
        doc["sums"] = [float(x) for x in table.sums]
    Path(path).write_text(MAGIC + "\n" + json.dumps(doc, indent=1) + "\n")


def load_table(path: str | Path, mdp: MdpConfig | None = None) -> tuple[ValueTable | QTable, dict]:
    """Read a table file; returns ``(table, header)`` where header has method/config."""
    text = Path(path).read_text()
    first, _, body = text.partition("\n")
    if first.strip() != MAGIC:
        raise ValueError(f"{path}: not a table file (expected header {MAGIC!r})")
    doc = json.loads(body)
    N, U = int(doc["N"]), int(doc["U"])
    if mdp is not None and (N, U) != (mdp.N, mdp.U):
        raise _shape_error(doc.get("kind", "?"), N, U, mdp)
    if doc["kind"] == "q":
        table = QTable(N, U, np.asarray(doc["q"], dtype=float))
    else:
        table = ValueTable(
            N, U,
            np.asarray(doc["values"], dtype=float),
            np.asarray(doc["sums"], dtype=float),
            np.asarray(doc["counts"], dtype=np.int64),
        )
    header = {k: doc[k] for k in ("method", "config", "kind")}
    return table, header
