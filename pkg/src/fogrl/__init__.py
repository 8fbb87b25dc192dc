"""Tabular reinforcement learning for fog-node admission control."""

__version__ = "0.1.0"
