"""Rock Paper Scissors against a biased opponent whose bias is reshuffled every episode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gamebench.envs.base import Environment, StepInfo, Transition, fmt_reward
from gamebench.errors import EpisodeOver

MOVES = ["Rock", "Paper", "Scissors"]
# BEATS[i] is the move that move i defeats
BEATS = {0: 2, 1: 0, 2: 1}
NEW_ROUND = "A new round begins."


def rps_outcome(move: int, opponent: int) -> int:
    """+1 win, 0 tie, -1 loss for ``move`` against ``opponent``."""
    if move == opponent:
        return 0
    return 1 if BEATS[move] == opponent else -1


@dataclass
class RpsState:
    bias: tuple[float, float, float]
    horizon: int
    rng: np.random.Generator
    round: int = 0
    wins: int = 0
    ties: int = 0
    losses: int = 0
    last_message: str = NEW_ROUND


def rps_step(state: RpsState, move: int) -> Transition:
    if state.round >= state.horizon:
        raise EpisodeOver("rps episode already ended")
    opponent = int(state.rng.choice(3, p=state.bias))
    result = rps_outcome(move, opponent)
    state.round += 1
    if result > 0:
        state.wins += 1
        outcome, verb = "win", "won"
    elif result == 0:
        state.ties += 1
        outcome, verb = "tie", "tied"
    else:
        state.losses += 1
        outcome, verb = "loss", "lost"
    reward = float(result)
    state.last_message = (
        f"You played {MOVES[move]} and the opponent played {MOVES[opponent]}. "
        f"You {verb} and received reward {fmt_reward(reward)}."
    )
    return Transition(
        next_observation=state.last_message,
        reward=reward,
        truncated=state.round >= state.horizon,
        info=StepInfo(base_reward=reward, opponent=MOVES[opponent], outcome=outcome),
    )


class RpsEnv(Environment):
    game = "rps"
    objective = "Win as many rounds as possible by figuring out which moves the opponent prefers."

    @property
    def action_labels(self) -> list[str]:
        return MOVES

    def _new_state(self, rng: np.random.Generator) -> RpsState:
        perm = rng.permutation(3)
        bias = tuple(float(self.config.rps_bias[i]) for i in perm)
        return RpsState(bias=bias, horizon=self.horizon, rng=rng)

    def _step(self, index: int) -> Transition:
        return rps_step(self.state, index)

    def render_observation(self) -> str:
        return self.state.last_message

    def render_manual(self) -> str:
        return (
            "You are playing Rock Paper Scissors. Rock beats Scissors, Scissors beats Paper "
            "and Paper beats Rock. A win gives reward 1, a tie 0 and a loss -1. "
            "The opponent does not choose uniformly: it favours some moves over others, "
            "and its preferences are reshuffled at the start of every round. "
            f"A round lasts {self.horizon} plays."
        )
