"""Tower of Hanoi with two or three disks.

Disks are numbered by size, 0 being the smallest. Each rod is a list read
bottom to top, so a legal rod is strictly decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gamebench.envs.base import Environment, StepInfo, Transition
from gamebench.errors import EpisodeOver

RODS = "ABC"
MOVES: list[tuple[int, int]] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]

REWARDS = {"valid": 0.0, "invalid": -1.0, "goal": 100.0}
SHAPED_REWARDS = {"valid": 1.0, "invalid": -2.0, "goal": 100.0}


def move_label(move: tuple[int, int]) -> str:
    src, dst = move
    return f"Move the top disk from rod {RODS[src]} to rod {RODS[dst]}"


ACTION_LABELS = [move_label(m) for m in MOVES]


@dataclass
class HanoiState:
    rods: list[list[int]]
    horizon: int = 30
    move_count: int = 0
    step: int = 0
    n_disks: int = field(init=False)

    def __post_init__(self) -> None:
        self.n_disks = sum(len(r) for r in self.rods)

    @classmethod
    def start(cls, n_disks: int, horizon: int = 30) -> HanoiState:
        return cls(rods=[list(range(n_disks - 1, -1, -1)), [], []], horizon=horizon)

    @property
    def solved(self) -> bool:
        return len(self.rods[2]) == self.n_disks


def is_legal(rods: list[list[int]], move: tuple[int, int]) -> bool:
    src, dst = move
    if not rods[src]:
        return False
    return not rods[dst] or rods[src][-1] < rods[dst][-1]


def hanoi_valid_moves(state: HanoiState) -> list[tuple[int, int]]:
    """Legal ``(from_rod, to_rod)`` moves, in canonical action order."""
    return [m for m in MOVES if is_legal(state.rods, m)]


def hanoi_step(state: HanoiState, move: tuple[int, int], shaped: bool = False) -> Transition:
    if state.solved or state.step >= state.horizon:
        raise EpisodeOver("hanoi episode already ended")
    table = SHAPED_REWARDS if shaped else REWARDS
    state.step += 1
    valid = is_legal(state.rods, move)
    if valid:
        src, dst = move
        state.rods[dst].append(state.rods[src].pop())
        state.move_count += 1
        key = "goal" if state.solved else "valid"
    else:
        key = "invalid"
    terminated = state.solved
    info = StepInfo(
        valid_move=valid,
        goal_reached=terminated,
        base_reward=REWARDS[key],
        disks_on_target=len(state.rods[2]),
    )
    return Transition(
        next_observation=render_rods(state),
        reward=table[key],
        terminated=terminated,
        truncated=not terminated and state.step >= state.horizon,
        info=info,
    )


def render_rods(state: HanoiState) -> str:
    return "\n".join(f"{RODS[i]}: |bottom, {list(rod)}, top|" for i, rod in enumerate(state.rods))


class HanoiEnv(Environment):
    game = "hanoi"
    objective = "Move every disk from rod A to rod C."

    @property
    def action_labels(self) -> list[str]:
        return ACTION_LABELS

    def _new_state(self, rng: np.random.Generator) -> HanoiState:
        return HanoiState.start(self.config.hanoi_disks, horizon=self.horizon)

    def _step(self, index: int) -> Transition:
        return hanoi_step(self.state, MOVES[index], shaped=self.config.reward_shaping)

    def valid_actions(self) -> list[str]:
        return [move_label(m) for m in hanoi_valid_moves(self.state)]

    def render_observation(self) -> str:
        return render_rods(self.state)

    def render_manual(self) -> str:
        n = self.config.hanoi_disks
        rewards = SHAPED_REWARDS if self.config.reward_shaping else REWARDS
        lines = [
            f"There are three rods, A, B and C, and {n} disks numbered 0 to {n - 1} by size; "
            "disk 0 is the smallest.",
            "Each rod is shown as |bottom, [...], top|, listing its disks from bottom to top.",
            "You may move the top disk of one rod onto another rod. "
            "A larger disk can never rest on a smaller one.",
            "The goal is to move all disks from rod A to rod C.",
            f"A legal move gives reward {rewards['valid']:g}, an illegal move gives reward "
            f"{rewards['invalid']:g} and leaves the rods unchanged, and completing the "
            f"puzzle gives reward {rewards['goal']:g}.",
            f"You have at most {self.horizon} moves.",
        ]
        if self.config.show_valid_actions and self.state is not None:
            lines.append("Valid actions in the current state: " + "; ".join(self.valid_actions()) + ".")
        return "\n".join(lines)
