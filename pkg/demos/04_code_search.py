"""
Searching for codes with a DQN agent
====================================

Flip bits of the 3 x 7 parity-check matrix to maximise
-failure_rate + (rank - 3).  The default configuration (50 episodes of 32
steps, each reward training a decoder on 2000 samples for 200 epochs) takes
hours; this script uses a much smaller reward budget and a milder channel so
it finishes in seconds.
"""

from __future__ import annotations

from collections import Counter

from mlqec import gf2
from mlqec.dqn import RewardBudget, RLConfig, learn_code
from mlqec.pauli import ChannelParams

seed_h = gf2.hamming_parity_check(3)
params = ChannelParams(0.01, 0.001, 0.001)
config = RLConfig(
    episodes=4,
    steps_per_episode=32,
    reward_budget=RewardBudget(n_samples=300, epochs=3, eval_trials=300, hidden=(32, 32)),
    seed=0,
)

result = learn_code(seed_h, params, config)
print("reward of the seed matrix", result.initial_reward)
print("best reward", result.best_reward)
print("H_best:")
print(result.h_best)
print("distinct rewards computed:", result.reward_calls)

# %%
# What the agent saw, step by step.
print(Counter(rec["status"] for rec in result.log))
for rec in result.log[:10]:
    print(rec["episode"], rec["step"], rec["action"], rec["rank"], round(rec["reward"], 4), round(rec["epsilon"], 3))
