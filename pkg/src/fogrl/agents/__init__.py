from fogrl.agents.base import AgentConfig, ConvergenceSpec, ConvergenceTrace
from fogrl.agents.mc import mc_train
from fogrl.agents.oracle import dp_oracle, gap_report, reachable_states, value_iteration
from fogrl.agents.policies import (
    ThresholdPolicy,
    epsilon_greedy,
    greedy_q_action,
    mc_action,
    threshold_action,
)
from fogrl.agents.tables import QTable, ValueTable, load_table, save_table
from fogrl.agents.td import n_step_target, q_update, td_train

__all__ = [
    "AgentConfig", "ConvergenceSpec", "ConvergenceTrace", "mc_train", "dp_oracle", "gap_report",
    "reachable_states", "value_iteration", "ThresholdPolicy", "epsilon_greedy", "greedy_q_action",
    "mc_action", "threshold_action", "QTable", "ValueTable", "load_table", "save_table",
    "n_step_target", "q_update", "td_train",
]
