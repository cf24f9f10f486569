"""Two-armed bandit with a hidden, per-episode optimal arm."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gamebench.envs.base import Environment, StepInfo, Transition, fmt_reward
from gamebench.errors import EpisodeOver

ARM_LABELS = ["pull slot machine 1", "pull slot machine 2"]
NEW_ROUND = "A new round begins."


@dataclass
class BanditState:
    optimal_arm: int
    horizon: int
    pulls: list[int] = field(default_factory=lambda: [0, 0])
    step: int = 0
    last_message: str = NEW_ROUND


def bandit_step(state: BanditState, arm: int) -> Transition:
    """Pull ``arm`` (1 or 2). Pays +1 on the optimal arm and -1 otherwise."""
    if arm not in (1, 2):
        raise ValueError(f"arm must be 1 or 2, got {arm}")
    if state.step >= state.horizon:
        raise EpisodeOver("bandit episode already ended")
    optimal = arm == state.optimal_arm
    reward = 1.0 if optimal else -1.0
    state.pulls[arm - 1] += 1
    state.step += 1
    state.last_message = f"You pulled slot machine {arm}, you received reward {fmt_reward(reward)}."
    return Transition(
        next_observation=state.last_message,
        reward=reward,
        terminated=False,
        truncated=state.step >= state.horizon,
        info=StepInfo(base_reward=reward, optimal=optimal),
    )


class BanditEnv(Environment):
    game = "bandit"
    objective = "Collect as much reward as possible by pulling the better slot machine as often as you can."

    @property
    def action_labels(self) -> list[str]:
        return ARM_LABELS

    def _new_state(self, rng: np.random.Generator) -> BanditState:
        return BanditState(optimal_arm=int(rng.integers(1, 3)), horizon=self.horizon)

    def _step(self, index: int) -> Transition:
        return bandit_step(self.state, index + 1)

    def render_observation(self) -> str:
        return self.state.last_message

    def render_manual(self) -> str:
        return (
            "You are in a casino with two slot machines, slot machine 1 and slot machine 2. "
            "Each pull of a slot machine pays a reward of 1 or -1. "
            "One machine pays better than the other, and which one is better may change "
            "from one round to the next. "
            f"You have {self.horizon} pulls in this round."
        )
