from dlma.agents.dqn import DQNAgent, dqn_target, dqn_train_step
from dlma.agents.fairness import (
    FairDQNAgent,
    FairnessObjective,
    RoundRobin,
    alpha_utility,
    bigagent_dispatch,
    fairness_select,
    multiq_train_step,
)
from dlma.agents.policy import EpsilonSchedule, argmax_random, epsilon_greedy
from dlma.agents.replay import ReplayMemory
from dlma.agents.state import encode, initial_state, pair_code, update_state
from dlma.agents.tabular import TabularAgent, TabularQ, tabular_update

__all__ = [
    "DQNAgent",
    "EpsilonSchedule",
    "FairDQNAgent",
    "FairnessObjective",
    "ReplayMemory",
    "RoundRobin",
    "TabularAgent",
    "TabularQ",
    "alpha_utility",
    "argmax_random",
    "bigagent_dispatch",
    "dqn_target",
    "dqn_train_step",
    "encode",
    "epsilon_greedy",
    "fairness_select",
    "initial_state",
    "multiq_train_step",
    "pair_code",
    "tabular_update",
    "update_state",
]
