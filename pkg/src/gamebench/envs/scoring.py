"""Per-episode game scores, computed from recorded transitions only."""

from __future__ import annotations

from dataclasses import dataclass, field

from gamebench.errors import IncompleteEpisode


@dataclass
class EpisodeScore:
    game: str
    value: float
    breakdown: dict[str, float] = field(default_factory=dict)


def episode_score(game: str, episode) -> EpisodeScore:
    """Score a finished episode.

    bandit counts optimal pulls, rps counts wins, hanoi counts disks on rod C at
    the end and messenger sums the unshaped rewards.
    """
    if not episode.complete:
        raise IncompleteEpisode(f"episode {episode.episode_index} has not ended")
    steps = episode.steps
    if game == "bandit":
        n = sum(1 for s in steps if s.info.optimal)
        return EpisodeScore(game, float(n), {"optimal_pulls": n})
    if game == "rps":
        n = sum(1 for s in steps if s.info.outcome == "win")
        return EpisodeScore(game, float(n), {"wins": n})
    if game == "hanoi":
        n = steps[-1].info.disks_on_target
        return EpisodeScore(game, float(n), {"disks_on_target": n})
    if game == "messenger":
        total = float(sum(s.info.base_reward for s in steps))
        return EpisodeScore(game, total, {"accumulated_reward": total})
    raise ValueError(f"unknown game {game!r}")
