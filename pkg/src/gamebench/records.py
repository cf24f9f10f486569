"""Step and episode records: the unit of agent memory, logging and fitness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from gamebench.envs.base import StepInfo


@dataclass
class StepRecord:
    t: int
    state: str
    action: str
    reward: float
    next_state: str
    terminated: bool = False
    truncated: bool = False
    info: StepInfo = field(default_factory=StepInfo)

    def to_dict(self) -> dict[str, Any]:
        return {
            "step": self.t,
            "state": self.state,
            "action": self.action,
            "reward": self.reward,
            "next_state": self.next_state,
            "terminated": self.terminated,
            "truncated": self.truncated,
            "flags": self.info.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StepRecord:
        return cls(
            t=data["step"],
            state=data["state"],
            action=data["action"],
            reward=data["reward"],
            next_state=data["next_state"],
            terminated=data["terminated"],
            truncated=data["truncated"],
            info=StepInfo.from_dict(data["flags"]),
        )


@dataclass
class EpisodeRecord:
    episode_index: int
    game: str
    horizon: int
    steps: list[StepRecord] = field(default_factory=list)
    aborted: bool = False
    score: Any = None  # EpisodeScore once the episode is complete

    @property
    def cumulative_reward(self) -> float:
        return float(sum(s.reward for s in self.steps))

    @property
    def complete(self) -> bool:
        return bool(self.steps) and not self.aborted and (self.steps[-1].terminated or self.steps[-1].truncated)

    def append(self, step: StepRecord) -> None:
        if self.steps and step.t <= self.steps[-1].t:
            raise ValueError("step indices must increase")
        if len(self.steps) >= self.horizon:
            raise ValueError(f"episode already holds {self.horizon} steps")
        self.steps.append(step)
