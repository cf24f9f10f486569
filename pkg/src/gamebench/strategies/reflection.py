"""Per-step self-reflection, discarded at episode boundaries."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Hashable, Sequence

from gamebench.errors import BackendUnavailable
from gamebench.prompting import render_history, render_step
from gamebench.strategies.templates import render_template

log = logging.getLogger(__name__)


@dataclass
class Reflection:
    episode_index: int
    step_index: int
    text: str


def reflect(
    steps: Sequence,
    objective: str,
    backend,
    *,
    manual: str = "",
    episode_index: int = 0,
    key: Hashable | None = None,
) -> Reflection:
    """Ask the backend to critique the trajectory so far against the objective."""
    if not steps:
        raise ValueError("reflect needs at least one recorded step")
    history, _ = render_history([render_step(s) for s in steps])
    prompt = render_template("reflection", MANUAL=manual, OBJECTIVE=objective, HISTORY=history)
    text = backend.complete(prompt, key=key).strip()
    return Reflection(episode_index=episode_index, step_index=steps[-1].t, text=text)


class Reflector:
    """Holds the single active reflection for the current episode."""

    def __init__(self) -> None:
        self.current: Reflection | None = None
        self.episode_log: list[Reflection] = []
        self.episode_index = 0

    def start_episode(self, episode_index: int) -> None:
        self.episode_index = episode_index
        self.current = None
        self.episode_log = []

    def update(self, steps, objective, backend, *, manual="", key=None, sink=None) -> Reflection | None:
        try:
            new = reflect(steps, objective, backend, manual=manual, episode_index=self.episode_index, key=key)
        except BackendUnavailable as exc:
            log.warning("reflection skipped at step %d: %s", steps[-1].t, exc)
            if sink:
                sink("reflection_skipped", {"step": steps[-1].t, "error": str(exc)})
            return self.current
        self.current = new
        self.episode_log.append(new)
        if sink:
            sink("reflection", {"step": new.step_index, "text": new.text})
        return new
