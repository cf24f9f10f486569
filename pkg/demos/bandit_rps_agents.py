"""Scripted agents on the bandit and rock-paper-scissors games.

An agent that knows the hidden state sets the ceiling, the seeded random
backend sets the floor. Run: python3 demos/bandit_rps_agents.py
"""

from __future__ import annotations

import numpy as np

from gamebench.agent import run_episode
from gamebench.backend import RandomBackend, ScriptedBackend
from gamebench.envs import EnvConfig, make_env

BEATS_FAVOURITE = {0: "Paper", 1: "Scissors", 2: "Rock"}


def mean_score(env, backend, episodes: int) -> float:
    return float(np.mean([run_episode(env, None, backend, seed=ep, episode_index=ep).score.value for ep in range(episodes)]))


def main() -> None:
    bandit = make_env(EnvConfig(game="bandit"))
    peek = ScriptedBackend(policy=lambda prompt, key: bandit.legal_actions[bandit.state.optimal_arm - 1])
    print(f"bandit  optimal {mean_score(bandit, peek, 50):5.2f}   random {mean_score(bandit, RandomBackend(1), 200):5.2f}   (out of 50)")

    rps = make_env(EnvConfig(game="rps"))

    def best_response(prompt, key):
        favourite = int(np.argmax(rps.state.bias))
        return BEATS_FAVOURITE[favourite]

    print(f"rps     best response {mean_score(rps, ScriptedBackend(policy=best_response), 200):5.2f} wins   "
          f"random {mean_score(rps, RandomBackend(1), 200):5.2f} wins   (out of 50)")


if __name__ == "__main__":
    main()
