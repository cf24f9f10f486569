"""Prompt augmentations layered on the base agent.

``base`` adds nothing; ``reflection`` reflects after every step;
``reflection_oracle`` also injects evolved heuristics; ``reflection_planner``
also injects a lookahead recommendation. Heuristics never reach the planner.
"""

from __future__ import annotations

import logging

import numpy as np

from gamebench.errors import BackendUnavailable, PlanParseFailure
from gamebench.strategies.oracle import (
    HeuristicSet,
    LineageEntry,
    Oracle,
    OracleState,
    initialize_heuristics,
    propose_offspring,
    select_survivor,
    single_edit,
    split_rules,
)
from gamebench.strategies.planner import PlannerRecommendation, Rollout, exact_plan, parse_rollouts, plan
from gamebench.strategies.reflection import Reflection, Reflector, reflect
from gamebench.strategies.templates import load_template, render_template, template_hashes

log = logging.getLogger(__name__)

STRATEGIES = {
    "base": (False, False, False),
    "reflection": (True, False, False),
    "reflection_oracle": (True, True, False),
    "reflection_planner": (True, False, True),
}


class Strategy:
    def __init__(
        self,
        name: str = "base",
        backend=None,
        rng: np.random.Generator | None = None,
        *,
        exact_planner: bool = False,
    ):
        if name not in STRATEGIES:
            raise ValueError(f"unknown strategy {name!r}; expected one of {sorted(STRATEGIES)}")
        self.name = name
        use_reflection, use_oracle, use_planner = STRATEGIES[name]
        if (use_reflection or use_oracle or use_planner) and backend is None:
            raise ValueError(f"strategy {name!r} needs a backend")
        self.backend = backend
        self.reflector = Reflector() if use_reflection else None
        self.oracle = Oracle(backend, rng if rng is not None else np.random.default_rng(0)) if use_oracle else None
        self.use_planner = use_planner
        self.exact_planner = exact_planner
        self.recommendation: PlannerRecommendation | None = None
        self.heuristics_text: str | None = None

    def start_episode(self, episode_index: int) -> None:
        if self.reflector:
            self.reflector.start_episode(episode_index)
        self.recommendation = None
        self.heuristics_text = None
        if self.oracle and self.oracle.active() is not None:
            self.heuristics_text = self.oracle.active().render()

    def augmentations(self) -> dict[str, str]:
        sections = {}
        if self.reflector and self.reflector.current is not None:
            sections["REFLECTION"] = self.reflector.current.text
        if self.heuristics_text is not None:
            sections["HEURISTICS"] = self.heuristics_text
        if self.recommendation is not None:
            sections["PLAN"] = self.recommendation.render()
        return sections

    def before_step(self, env, steps, key=None, sink=None) -> None:
        if not self.use_planner:
            return
        self.recommendation = None
        reflection = self.reflector.current if self.reflector else None
        try:
            if self.exact_planner:
                rec = exact_plan(env)
            else:
                rec = plan(env.render_observation(), env.render_manual(), reflection, env.legal_actions, self.backend, key=key)
        except (PlanParseFailure, BackendUnavailable) as exc:
            log.info("no plan this step: %s", exc)
            if sink:
                sink("plan_failed", {"error": str(exc)})
            return
        self.recommendation = rec
        if sink:
            sink("plan", rec.to_dict())

    def after_step(self, env, steps, key=None, sink=None) -> None:
        if self.reflector:
            self.reflector.update(steps, env.objective, self.backend, manual=env.render_manual(), key=key, sink=sink)

    def end_episode(self, env, episode, key=None, sink=None) -> None:
        if self.oracle:
            self.oracle.end_episode(
                episode,
                self.reflector.episode_log if self.reflector else [],
                manual=env.render_manual(),
                objective=env.objective,
                key=key,
                sink=sink,
            )


def make_strategy(name: str, backend=None, rng: np.random.Generator | None = None, **kwargs) -> Strategy:
    return Strategy(name, backend, rng, **kwargs)


__all__ = [
    "STRATEGIES",
    "HeuristicSet",
    "LineageEntry",
    "Oracle",
    "OracleState",
    "PlannerRecommendation",
    "Reflection",
    "Reflector",
    "Rollout",
    "Strategy",
    "exact_plan",
    "initialize_heuristics",
    "load_template",
    "make_strategy",
    "parse_rollouts",
    "plan",
    "propose_offspring",
    "reflect",
    "render_template",
    "select_survivor",
    "single_edit",
    "split_rules",
    "template_hashes",
]
