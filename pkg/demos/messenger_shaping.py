"""Messenger with reward shaping, driven by a shortest-path agent.

Prints the observation text and the per-step shaped reward breakdown.
Run: python3 demos/messenger_shaping.py
"""

from __future__ import annotations

from collections import deque

from gamebench.agent import run_episode
from gamebench.backend import ScriptedBackend
from gamebench.envs import EnvConfig, make_env

MOVES = {"move north": (-1, 0), "move south": (1, 0), "move east": (0, 1), "move west": (0, -1)}


def first_move(size, start, end, blocked) -> str:
    first = {start: "stay"}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == end:
            return first[cell]
        for label, (dr, dc) in MOVES.items():
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt in first or nxt in blocked or not (0 <= nxt[0] < size[0] and 0 <= nxt[1] < size[1]):
                continue
            first[nxt] = label if cell == start else first[cell]
            queue.append(nxt)
    return "stay"


def main() -> None:
    env = make_env(EnvConfig(game="messenger", reward_shaping=True))

    def policy(prompt, key):
        s = env.state
        target = s.goal_pos if s.carrying else s.message_pos
        return first_move(s.grid_size, s.agent_pos, target, {s.enemy_pos})

    for ep in range(3):
        rec = run_episode(env, None, ScriptedBackend(policy=policy), seed=ep, episode_index=ep)
        print(f"episode {ep}: {rec.steps[0].state}")
        for s in rec.steps:
            i = s.info
            event = "pickup" if i.picked_up else "delivery" if i.delivered else "collision" if i.collided else ""
            print(f"  t={s.t:<2} {s.action:<11} distance {i.distance_before}->{i.distance_to_target}  reward {s.reward:>5g} {event}")
        print(f"  return {rec.cumulative_reward:g}, score {rec.score.value:g}\n")


if __name__ == "__main__":
    main()
