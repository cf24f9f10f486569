"""Configuration, transition types and the common environment surface."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from gamebench.errors import EpisodeOver, InvalidAction, InvalidConfig, NotReset

GAMES = ("bandit", "rps", "hanoi", "messenger")

DEFAULT_STEPS = {"bandit": 50, "rps": 50, "hanoi": 30, "messenger": 10}

UINT64_MAX = 2**64 - 1


@dataclass
class EnvConfig:
    game: str
    steps_per_episode: int | None = None
    episodes: int = 20
    hanoi_disks: int = 3
    reward_shaping: bool = False
    show_valid_actions: bool = False
    use_synonyms: bool = True
    rps_bias: tuple[float, float, float] = (0.5, 0.25, 0.25)
    seed: int = 0
    grid_size: tuple[int, int] = (5, 5)
    # resample Messenger layouts until message and goal are reachable in time
    ensure_solvable: bool = True

    def __post_init__(self) -> None:
        if self.steps_per_episode is None and self.game in DEFAULT_STEPS:
            self.steps_per_episode = DEFAULT_STEPS[self.game]
        self.rps_bias = tuple(float(p) for p in self.rps_bias)
        self.grid_size = tuple(int(n) for n in self.grid_size)

    def validate(self) -> None:
        if self.game not in GAMES:
            raise InvalidConfig(f"unknown game {self.game!r}; expected one of {GAMES}")
        if not isinstance(self.steps_per_episode, int) or self.steps_per_episode < 1:
            raise InvalidConfig(f"steps_per_episode must be a positive integer, got {self.steps_per_episode!r}")
        if self.episodes < 1:
            raise InvalidConfig(f"episodes must be positive, got {self.episodes}")
        if not 0 <= self.seed <= UINT64_MAX:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.hanoi_disks not in (2, 3):
            raise InvalidConfig(f"hanoi_disks must be 2 or 3, got {self.hanoi_disks}")
        bias = self.rps_bias
        if len(bias) != 3 or any(p < 0 for p in bias) or abs(sum(bias) - 1.0) > 1e-9:
            raise InvalidConfig(f"rps_bias must be a probability 3-vector, got {bias}")
        rows, cols = self.grid_size
        if rows < 2 or cols < 2 or rows * cols < 4:
            raise InvalidConfig(f"grid_size too small for four distinct entities: {self.grid_size}")


@dataclass
class StepInfo:
    """Per-step flags. Game-specific fields stay ``None`` where they do not apply."""

    valid_move: bool | None = None
    picked_up: bool = False
    delivered: bool = False
    collided: bool = False
    goal_reached: bool = False
    distance_to_target: int | None = None
    distance_before: int | None = None
    base_reward: float = 0.0
    optimal: bool | None = None
    opponent: str | None = None
    outcome: str | None = None
    disks_on_target: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StepInfo:
        return cls(**data)


@dataclass
class Transition:
    next_observation: str
    reward: float
    terminated: bool = False
    truncated: bool = False
    info: StepInfo = field(default_factory=StepInfo)


def fmt_reward(value: float) -> str:
    """Render a reward the way transcripts show it: ``-1``, ``1``, ``0.5``."""
    return f"{value:g}"


class Environment(ABC):
    """Seedable text game. ``reset`` must be called before ``step``."""

    game: str = ""
    objective: str = ""

    def __init__(self, config: EnvConfig):
        self.config = config
        self.state: Any = None
        self.rng: np.random.Generator | None = None
        self.done = False
        self.steps_taken = 0

    @property
    def horizon(self) -> int:
        return self.config.steps_per_episode

    @property
    @abstractmethod
    def action_labels(self) -> list[str]:
        """Every action label, in fixed order."""

    @property
    def legal_actions(self) -> list[str]:
        # every label is always selectable; invalid Hanoi/Messenger moves are penalised, not hidden
        return list(self.action_labels)

    def reset(self, episode_seed: int) -> str:
        if not 0 <= int(episode_seed) <= UINT64_MAX:
            raise ValueError("episode_seed must be a 64-bit unsigned integer")
        self.rng = np.random.default_rng(int(episode_seed))
        self.done = False
        self.steps_taken = 0
        self.state = self._new_state(self.rng)
        return self.render_observation()

    def step(self, action: str) -> Transition:
        if self.state is None:
            raise NotReset("call reset() before step()")
        if self.done:
            raise EpisodeOver(f"{self.game} episode already ended")
        try:
            index = self.action_labels.index(action)
        except ValueError:
            raise InvalidAction(f"{action!r} is not an action of {self.game}") from None
        transition = self._step(index)
        self.steps_taken += 1
        self.done = transition.terminated or transition.truncated
        return transition

    @abstractmethod
    def _new_state(self, rng: np.random.Generator) -> Any: ...

    @abstractmethod
    def _step(self, index: int) -> Transition: ...

    @abstractmethod
    def render_observation(self) -> str: ...

    @abstractmethod
    def render_manual(self) -> str: ...
