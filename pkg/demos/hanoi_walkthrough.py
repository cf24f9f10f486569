"""Play 3-disk Tower of Hanoi with a scripted agent that knows the solution.

Shows the prompt the agent sees, every step, and the shaped-reward variant.
Run: python3 demos/hanoi_walkthrough.py
"""

from __future__ import annotations

from gamebench.agent import run_episode
from gamebench.backend import ScriptedBackend
from gamebench.envs import EnvConfig, make_env

SOLUTION = [
    "Move the top disk from rod A to rod C",
    "Move the top disk from rod A to rod B",
    "Move the top disk from rod C to rod B",
    "Move the top disk from rod A to rod C",
    "Move the top disk from rod B to rod A",
    "Move the top disk from rod B to rod C",
    "Move the top disk from rod A to rod C",
]


def main() -> None:
    for shaped in (False, True):
        env = make_env(EnvConfig(game="hanoi", reward_shaping=shaped, show_valid_actions=True))
        # a decision key is (game, strategy, t); t starts at 1
        backend = ScriptedBackend(policy=lambda prompt, key: SOLUTION[key[2] - 1])
        first_prompt = []
        backend.on_exchange = lambda ex: first_prompt.append(ex.prompt) if not first_prompt else None
        rec = run_episode(env, None, backend, seed=0)
        if not shaped:
            print("first prompt:\n" + first_prompt[0])
        print(f"--- reward shaping {'on' if shaped else 'off'} ---")
        for s in rec.steps:
            print(f"t={s.t:<2} reward={s.reward:>6g}  {s.action}")
        print(f"cumulative reward {rec.cumulative_reward:g}, score {rec.score.value:g} disks on rod C\n")


if __name__ == "__main__":
    main()
